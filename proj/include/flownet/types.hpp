#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flownet {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

using NodeId = int;
using EdgeId = int;

/// Error raised when an input file fails to parse or violates its schema.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error raised when parsed data violates a model invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error raised when a state leaves the admissible domain
/// (e.g. nonpositive density on an integrated cell).
struct DomainError : std::runtime_error {
  int cell = -1;
  explicit DomainError(const std::string& what, int cell_id = -1)
      : std::runtime_error(what), cell(cell_id) {}
};

}  // namespace flownet
