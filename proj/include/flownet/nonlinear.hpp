#pragma once

#include "flownet/forms.hpp"
#include "flownet/physics.hpp"

namespace flownet {

/// Nonlinear integral vectors in the unconstrained nodal basis of W_f.
/// Contract with E_map (FOM) or with a lifted reduced basis to obtain the
/// coordinate vectors f^alpha, f^beta, f^gamma.
struct NodalNonlinears {
  VecX f_alpha;  // <m/rho, w>_*
  VecX f_beta;   // <P'(rho) + m^2/(2 rho^2), dx w>_*
  VecX f_gamma;  // <-r(rho,m) m, w>_*
};

/// Per-cell 2x2 / 2x1 derivative blocks of the nodal nonlinears with
/// respect to (m_L, m_R) and the cell density.
struct NonlinearCellJacobian {
  int cell = -1;
  double dalpha_dm[2][2], dbeta_dm[2][2], dgamma_dm[2][2];
  double dalpha_drho[2], dbeta_drho[2], dgamma_drho[2];
};

/// Local contributions of one cell to the three nonlinear vectors, for the
/// two nodal flux dofs (left, right).
struct CellEval {
  double fa[2] = {0, 0}, fb[2] = {0, 0}, fg[2] = {0, 0};
  NonlinearCellJacobian jac{};
};

/// Evaluate one cell with form weight `weight` (area for the full form,
/// trained xi otherwise), cell density rho and nodal flux values (ml, mr).
/// Throws DomainError on inadmissible density.
CellEval eval_cell_nonlinear(const FemModel& fm, const PhysicsConfig& cfg, int cell,
                             double weight, double rho, double ml, double mr,
                             bool want_jacobian);

/// Evaluate the three nonlinear vectors over the cells of `form`.
/// `rho` holds cell densities (N1), `m_nodal` nodal flux values.
/// Throws DomainError (with the cell id) on nonpositive density.
NodalNonlinears assemble_nonlinear_nodal(const FemModel& fm, const PhysicsConfig& cfg,
                                         const VecX& rho, const VecX& m_nodal,
                                         const BilinearForm& form,
                                         std::vector<NonlinearCellJacobian>* jac = nullptr);

/// Coordinate-space variant per the FOM representation: returns vectors of
/// length N2 for the state (a1, a2).
struct NonlinearVectors {
  VecX f_alpha, f_beta, f_gamma;
};
NonlinearVectors assemble_nonlinear(const FemModel& fm, const PhysicsConfig& cfg,
                                    const VecX& a1, const VecX& a2,
                                    const BilinearForm& form);

/// Hamiltonian <P(rho) + m^2/(2 rho), 1>_* over the form's cells.
double hamiltonian_value(const FemModel& fm, const PhysicsConfig& cfg, const VecX& rho,
                         const VecX& m_nodal, const BilinearForm& form);

/// Dissipation functional <r(rho,m) m^2, 1>_* (nonnegative for weights >= 0).
double dissipation_value(const FemModel& fm, const PhysicsConfig& cfg, const VecX& rho,
                         const VecX& m_nodal, const BilinearForm& form);

/// Minimum cell density over the form's active cells.
double min_active_density(const VecX& rho, const BilinearForm& form);

}  // namespace flownet
