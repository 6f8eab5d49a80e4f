#include "flownet/nonlinear.hpp"

#include <cmath>
#include <limits>

namespace flownet {

namespace {

// Gauss-Legendre order 3 on [0,1]: exact for the polynomial degrees that
// arise with rho constant and m linear per cell.
constexpr int kGauss = 3;
const double kGx[kGauss] = {0.5 - std::sqrt(15.0) / 10.0, 0.5,
                            0.5 + std::sqrt(15.0) / 10.0};
const double kGw[kGauss] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

}  // namespace

CellEval eval_cell_nonlinear(const FemModel& fm, const PhysicsConfig& cfg, int cell,
                             double weight, double rho, double ml, double mr,
                             bool want_jacobian) {
  if (!(rho > 0.0) || !cfg.admissible(rho))
    throw DomainError(
        "nonpositive or inadmissible density on cell " + std::to_string(cell), cell);

  CellEval out;
  out.jac.cell = cell;
  const double h = fm.cell_width[cell];
  const double dPr = dP(cfg, rho);
  const double d2Pr = want_jacobian ? d2P(cfg, rho) : 0.0;

  for (int g = 0; g < kGauss; ++g) {
    const double x = kGx[g];
    const double wq = kGw[g] * h;  // quadrature weight incl. cell measure
    const double wbas[2] = {1.0 - x, x};
    const double mg = ml * wbas[0] + mr * wbas[1];

    const double phi = dPr + mg * mg / (2.0 * rho * rho);
    const auto fr = friction_rm(cfg, fm.cell_edge[cell], fm.cell_diameter[cell], rho, mg);

    for (int d = 0; d < 2; ++d) {
      out.fa[d] += wq * (mg / rho) * wbas[d];
      // dx w is +-1/h; the h from the measure cancels.
      const double dxw = (d == 0 ? -1.0 : 1.0) * kGw[g];
      out.fb[d] += dxw * phi;
      out.fg[d] -= wq * fr.rm * wbas[d];
      if (want_jacobian) {
        out.jac.dalpha_drho[d] += -wq * (mg / (rho * rho)) * wbas[d];
        out.jac.dbeta_drho[d] += dxw * (d2Pr - mg * mg / (rho * rho * rho));
        out.jac.dgamma_drho[d] += -wq * fr.d_rm_drho * wbas[d];
        for (int s = 0; s < 2; ++s) {
          out.jac.dalpha_dm[d][s] += wq * wbas[s] / rho * wbas[d];
          out.jac.dbeta_dm[d][s] += dxw * (mg / (rho * rho)) * wbas[s];
          out.jac.dgamma_dm[d][s] += -wq * fr.d_rm_dm * wbas[s] * wbas[d];
        }
      }
    }
  }

  for (int d = 0; d < 2; ++d) {
    out.fa[d] *= weight;
    out.fb[d] *= weight;
    out.fg[d] *= weight;
    if (want_jacobian) {
      out.jac.dalpha_drho[d] *= weight;
      out.jac.dbeta_drho[d] *= weight;
      out.jac.dgamma_drho[d] *= weight;
      for (int s = 0; s < 2; ++s) {
        out.jac.dalpha_dm[d][s] *= weight;
        out.jac.dbeta_dm[d][s] *= weight;
        out.jac.dgamma_dm[d][s] *= weight;
      }
    }
  }
  return out;
}

NodalNonlinears assemble_nonlinear_nodal(const FemModel& fm, const PhysicsConfig& cfg,
                                         const VecX& rho, const VecX& m_nodal,
                                         const BilinearForm& form,
                                         std::vector<NonlinearCellJacobian>* jac) {
  NodalNonlinears out;
  out.f_alpha = VecX::Zero(fm.num_nodal);
  out.f_beta = VecX::Zero(fm.num_nodal);
  out.f_gamma = VecX::Zero(fm.num_nodal);
  if (jac) {
    jac->clear();
    jac->reserve(form.cells.size());
  }

  for (int k = 0; k < form.size(); ++k) {
    const int i = form.cells[k];
    const int dl = fm.cell_dof_left[i];
    const int dr = fm.cell_dof_right[i];
    const CellEval ce = eval_cell_nonlinear(fm, cfg, i, form.weights[k], rho[i],
                                            m_nodal[dl], m_nodal[dr], jac != nullptr);
    const int dofs[2] = {dl, dr};
    for (int d = 0; d < 2; ++d) {
      out.f_alpha[dofs[d]] += ce.fa[d];
      out.f_beta[dofs[d]] += ce.fb[d];
      out.f_gamma[dofs[d]] += ce.fg[d];
    }
    if (jac) jac->push_back(ce.jac);
  }
  return out;
}

NonlinearVectors assemble_nonlinear(const FemModel& fm, const PhysicsConfig& cfg,
                                    const VecX& a1, const VecX& a2,
                                    const BilinearForm& form) {
  const VecX m_nodal = fm.nodal_values(a2);
  const NodalNonlinears nodal = assemble_nonlinear_nodal(fm, cfg, a1, m_nodal, form);
  NonlinearVectors out;
  out.f_alpha = fm.E_map.transpose() * nodal.f_alpha;
  out.f_beta = fm.E_map.transpose() * nodal.f_beta;
  out.f_gamma = fm.E_map.transpose() * nodal.f_gamma;
  return out;
}

double hamiltonian_value(const FemModel& fm, const PhysicsConfig& cfg, const VecX& rho,
                         const VecX& m_nodal, const BilinearForm& form) {
  double H = 0.0;
  for (int k = 0; k < form.size(); ++k) {
    const int i = form.cells[k];
    const double ri = rho[i];
    if (!(ri > 0.0) || !cfg.admissible(ri))
      throw DomainError(
          "nonpositive or inadmissible density on cell " + std::to_string(i), i);
    const double h = fm.cell_width[i];
    const double ml = m_nodal[fm.cell_dof_left[i]];
    const double mr = m_nodal[fm.cell_dof_right[i]];
    const double Pr = pressure_potential(cfg, ri);
    double acc = 0.0;
    for (int g = 0; g < kGauss; ++g) {
      const double mg = ml * (1.0 - kGx[g]) + mr * kGx[g];
      acc += kGw[g] * (Pr + mg * mg / (2.0 * ri));
    }
    H += form.weights[k] * h * acc;
  }
  return H;
}

double dissipation_value(const FemModel& fm, const PhysicsConfig& cfg, const VecX& rho,
                         const VecX& m_nodal, const BilinearForm& form) {
  double D = 0.0;
  for (int k = 0; k < form.size(); ++k) {
    const int i = form.cells[k];
    const double ri = rho[i];
    if (!(ri > 0.0)) throw DomainError("nonpositive density on cell " + std::to_string(i), i);
    const double h = fm.cell_width[i];
    const double ml = m_nodal[fm.cell_dof_left[i]];
    const double mr = m_nodal[fm.cell_dof_right[i]];
    double acc = 0.0;
    for (int g = 0; g < kGauss; ++g) {
      const double mg = ml * (1.0 - kGx[g]) + mr * kGx[g];
      acc += kGw[g] * friction_r(cfg, fm.cell_edge[i], fm.cell_diameter[i], ri, mg) * mg * mg;
    }
    D += form.weights[k] * h * acc;
  }
  return D;
}

double min_active_density(const VecX& rho, const BilinearForm& form) {
  double mn = std::numeric_limits<double>::infinity();
  for (int i : form.cells) mn = std::min(mn, rho[i]);
  return mn;
}

}  // namespace flownet
