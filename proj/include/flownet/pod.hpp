#pragma once

#include "flownet/fem_model.hpp"
#include "flownet/snapshots.hpp"
#include "flownet/system.hpp"

#include <Eigen/SparseLU>

#include <memory>
#include <string>

namespace flownet {

/// Block reduction matrices V1 (N1 x n1), V2 (N2 x n2), orthonormal in the
/// Q- and W-inner products respectively. Compatible bases additionally
/// satisfy im(Q V1) = im(J V2) and ker(J) subset im(V2).
struct ReductionBasis {
  MatX V1, V2;
  VecX singular_values;    // spectrum of the combined snapshot matrix
  VecX singular_values_2;  // second block (separate PCA bases only)
  std::string kind = "compatible-pod";
};

/// Weighted orthogonal projection V (V^T M V)^{-1} V^T M x.
VecX weighted_projection(const MatX& M, const MatX& V, const VecX& x);

/// PCA of columns of S in the inner product <x,y> = x^T (M y), by the
/// method of snapshots: returns all singular values and the first `count`
/// M-orthonormal modes.
struct PcaResult {
  MatX modes;
  VecX singular_values;
  int rank = 0;
};
PcaResult pca_in_product(const MatX& S, const MatX& MS, int count, double rank_tol = 1e-12);

/// Right-inverse of the derivative operator: columns of the result solve
/// J z = Q x with z W-orthogonal to ker(J). Factors a sparse saddle-point
/// system once per instance.
class DxPlusSolver {
 public:
  explicit DxPlusSolver(const FemModel& fm);
  MatX apply(const MatX& X) const;  // X: N1 x k -> N2 x k

 private:
  const FemModel* fm_;
  SpMat saddle_;
  double gamma_ = 1.0;
  Eigen::SparseLU<SpMat> lu_;
};

/// Optimal compatible reduction basis: the constrained PCA.
/// Throws ValidationError naming the numerical rank if n1 exceeds it.
ReductionBasis compatible_pod(const FemModel& fm, const SnapshotSet& snaps, int n1);

struct CompatibilityReport {
  double range_defect = 0.0;   // sin of the largest principal angle between
                               // im(Q V1) and im(J V2)
  double kernel_defect = 0.0;  // worst W-relative kernel inclusion residual
  double orth_defect_V1 = 0.0;
  double orth_defect_V2 = 0.0;
  double tolerance = 1e-10;
  bool pass = false;

  double worst() const;
};
CompatibilityReport check_compatibility(const FemModel& fm, const ReductionBasis& basis,
                                        double tol = 1e-10);

/// Scalar product <Pi_K w, Pi_K wt> + <dx w, dx wt> on W_f coordinates.
double kernel_derivative_product(const FemModel& fm, const VecX& w, const VecX& wt);

/// Dense Gram operator of the diamond scalar product (test/training sizes).
MatX kernel_derivative_gram(const FemModel& fm);

/// The two norms of the projection-equivalence identity: the diamond-norm
/// distance of the kernel-complement part of m to its projection onto
/// dx^+ Qtilde, and the L^2 distance of dx m to its projection onto
/// Qtilde. They agree for every m and subspace Qtilde.
std::pair<double, double> projection_equivalence_check(const FemModel& fm, const VecX& m,
                                                      const MatX& Qtilde);

/// Training objective in the original (density + diamond-norm flux) form.
double pod_objective_flux_form(const FemModel& fm, const SnapshotSet& snaps,
                               const MatX& V1, const MatX& V2);

/// Training objective in the reduced (density + flux-derivative) form.
double pod_objective_derivative_form(const FemModel& fm, const SnapshotSet& snaps,
                                     const MatX& V1);

/// Sum of squared singular values beyond the first n1 (the optimal value).
double singular_tail(const VecX& singular_values, int n1);

/// Galerkin projection onto a compatible basis; rejects bases that fail
/// check_compatibility.
std::unique_ptr<ReducedSystem> project_rom(const FemModel& fm, const PhysicsConfig& cfg,
                                           const BoundarySchedule& bc,
                                           const ReductionBasis& basis,
                                           double tol = 1e-10);

/// Basis files: "<prefix>.json" header plus "<prefix>_V1.csv", "<prefix>_V2.csv".
void save_basis(const ReductionBasis& basis, const std::string& prefix,
                uint64_t snapshot_hash = 0);
ReductionBasis load_basis(const std::string& prefix);

/// FNV-1a hash of raw matrix bytes, for basis provenance headers.
uint64_t matrix_hash(const MatX& a, const MatX& b);

}  // namespace flownet
