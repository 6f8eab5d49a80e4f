#pragma once

#include "flownet/fem_model.hpp"

#include <string>
#include <vector>

namespace flownet {

/// Cellwise bilinear form sum_{i in I} c_i int_{K_i} . dx. The full L^2
/// form has I = all cells and c_i = A^{e(i)}; a trained quadrature rule
/// restricts I and carries its own nonnegative weights (which absorb the
/// area factor).
struct BilinearForm {
  std::vector<int> cells;
  VecX weights;

  int size() const { return static_cast<int>(cells.size()); }
};

/// The exact L^2 form on a model: every cell, weighted by its edge area.
BilinearForm full_form(const FemModel& fm);

/// Trained empirical quadrature rule.
struct QuadratureRule {
  std::vector<int> cells;  // active cell indices I
  VecX weights;            // xi_i > 0 for i in I
  double C_tilde = 10.0;
  double cond_Mc = 0.0;

  BilinearForm form() const { return BilinearForm{cells, weights}; }
};

std::string rule_to_json(const QuadratureRule& rule);
QuadratureRule rule_from_json(const std::string& text);
void save_rule(const QuadratureRule& rule, const std::string& path);
QuadratureRule load_rule(const std::string& path);

}  // namespace flownet
