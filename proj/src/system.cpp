#include "flownet/system.hpp"

#include <cmath>
#include <vector>

namespace flownet {

namespace {

// Split the boundary matrix into potential-input and mass-flow columns.
std::pair<SpMat, SpMat> split_boundary(const FemModel& fm, const BoundarySchedule& bc) {
  const auto& pot = bc.potential_slots();
  const auto& flow = bc.flow_slots();
  SpMat Bp(fm.N2, static_cast<int>(pot.size()));
  SpMat Bf(fm.N2, static_cast<int>(flow.size()));
  std::vector<Triplet> tp, tf;
  for (size_t i = 0; i < pot.size(); ++i)
    for (SpMat::InnerIterator it(fm.B, pot[i]); it; ++it)
      tp.emplace_back(static_cast<int>(it.row()), static_cast<int>(i), it.value());
  for (size_t i = 0; i < flow.size(); ++i)
    for (SpMat::InnerIterator it(fm.B, flow[i]); it; ++it)
      tf.emplace_back(static_cast<int>(it.row()), static_cast<int>(i), it.value());
  Bp.setFromTriplets(tp.begin(), tp.end());
  Bf.setFromTriplets(tf.begin(), tf.end());
  return {Bp, Bf};
}

}  // namespace

VecX System::pack(const StateVec& s) const {
  VecX x(size());
  x.head(n1()) = s.a1;
  x.segment(n1(), n2()) = s.a2;
  x.tail(num_multipliers()) = s.lambda;
  return x;
}

StateVec System::unpack(const VecX& x) const {
  StateVec s;
  s.a1 = x.head(n1());
  s.a2 = x.segment(n1(), n2());
  s.lambda = x.tail(num_multipliers());
  return s;
}

VecX System::blended_potentials(double t, double homotopy) const {
  VecX u = bc_->potentials(t);
  if (homotopy >= 1.0 || u.size() == 0) return u;
  const double mean = u.mean();
  return VecX::Constant(u.size(), mean) + homotopy * (u.array() - mean).matrix();
}

VecX System::blended_flows(double t, double homotopy) const {
  VecX g = bc_->flows(t);
  return homotopy >= 1.0 ? g : VecX(homotopy * g);
}

double System::hamiltonian(const StateVec& s) const {
  return hamiltonian_value(*fm_, *cfg_, lift_a1(s.a1), fm_->nodal_values(lift_a2(s.a2)),
                           form_);
}

double System::dissipation(const StateVec& s) const {
  return dissipation_value(*fm_, *cfg_, lift_a1(s.a1), fm_->nodal_values(lift_a2(s.a2)),
                           form_);
}

double System::min_density(const StateVec& s) const {
  return min_active_density(lift_a1(s.a1), form_);
}

double System::boundary_power(const StateVec& s, double t) const {
  const VecX tau_m = fm_->B.transpose() * lift_a2(s.a2);
  const VecX u = bc_->potentials(t);
  double power = 0.0;
  const auto& pot = bc_->potential_slots();
  for (size_t i = 0; i < pot.size(); ++i) power += u[static_cast<Eigen::Index>(i)] * tau_m[pot[i]];
  const auto& flow = bc_->flow_slots();
  for (size_t i = 0; i < flow.size(); ++i) power += s.lambda[static_cast<Eigen::Index>(i)] * tau_m[flow[i]];
  return power;
}

// ---------------------------------------------------------------------------
// FomSystem

FomSystem::FomSystem(const FemModel& fm, const PhysicsConfig& cfg,
                     const BoundarySchedule& bc)
    : System(fm, cfg, bc, full_form(fm)) {
  std::tie(B_pot_, B_flow_) = split_boundary(fm, bc);
}

VecX FomSystem::alpha_term(const VecX& x) const {
  const StateVec s = unpack(x);
  const NodalNonlinears nl =
      assemble_nonlinear_nodal(*fm_, *cfg_, s.a1, fm_->nodal_values(s.a2), form_);
  return fm_->E_map.transpose() * nl.f_alpha;
}

VecX FomSystem::residual(const VecX& x, const VecX* xprev, double t, double dt,
                         double homotopy, const VecX* falpha_prev) const {
  const StateVec s = unpack(x);
  const VecX m_nodal = fm_->nodal_values(s.a2);
  const NodalNonlinears nl = assemble_nonlinear_nodal(*fm_, *cfg_, s.a1, m_nodal, form_);
  const VecX u = blended_potentials(t, homotopy);
  const VecX g = blended_flows(t, homotopy);

  VecX F(size());
  VecX r2 = -(fm_->E_map.transpose() * (nl.f_beta + nl.f_gamma)) - B_pot_ * u -
            B_flow_ * s.lambda;
  if (xprev) {
    const StateVec sp = unpack(*xprev);
    F.head(n1()) = fm_->Q_diag.cwiseProduct(s.a1 - sp.a1) / dt + fm_->J * s.a2;
    const VecX fap = falpha_prev ? *falpha_prev : alpha_term(*xprev);
    r2 += (fm_->E_map.transpose() * nl.f_alpha - fap) / dt;
  } else {
    F.head(n1()) = fm_->J * s.a2;
  }
  F.segment(n1(), n2()) = r2;
  F.tail(num_multipliers()) = B_flow_.transpose() * s.a2 - g;
  return F;
}

VecX FomSystem::newton_direction(const VecX& x, const VecX* xprev, double t, double dt,
                                 double homotopy, const VecX& F) const {
  (void)t;
  (void)homotopy;
  const StateVec s = unpack(x);
  const VecX m_nodal = fm_->nodal_values(s.a2);
  std::vector<NonlinearCellJacobian> cells;
  assemble_nonlinear_nodal(*fm_, *cfg_, s.a1, m_nodal, form_, &cells);

  // Nodal-space derivative blocks of f = f_alpha/dt - f_beta - f_gamma
  // (transient) or -f_beta - f_gamma (steady).
  const double wa = xprev ? 1.0 / dt : 0.0;
  std::vector<Triplet> t_rho, t_m;
  t_rho.reserve(cells.size() * 2);
  t_m.reserve(cells.size() * 4);
  for (const auto& cj : cells) {
    const int dofs[2] = {fm_->cell_dof_left[cj.cell], fm_->cell_dof_right[cj.cell]};
    for (int d = 0; d < 2; ++d) {
      t_rho.emplace_back(dofs[d], cj.cell,
                         wa * cj.dalpha_drho[d] - cj.dbeta_drho[d] - cj.dgamma_drho[d]);
      for (int q = 0; q < 2; ++q)
        t_m.emplace_back(dofs[d], dofs[q],
                         wa * cj.dalpha_dm[d][q] - cj.dbeta_dm[d][q] - cj.dgamma_dm[d][q]);
    }
  }
  SpMat D_rho(fm_->num_nodal, n1());
  D_rho.setFromTriplets(t_rho.begin(), t_rho.end());
  SpMat D_m(fm_->num_nodal, fm_->num_nodal);
  D_m.setFromTriplets(t_m.begin(), t_m.end());
  const SpMat M21 = fm_->E_map.transpose() * D_rho;
  const SpMat M22 = fm_->E_map.transpose() * D_m * fm_->E_map;

  const int N1 = n1(), N2 = n2(), NF = num_multipliers();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(M21.nonZeros() + M22.nonZeros() + fm_->J.nonZeros() * 2 +
                                   N1 + 4 * NF));
  if (xprev)
    for (int i = 0; i < N1; ++i) trip.emplace_back(i, i, fm_->Q_diag[i] / dt);
  for (int k = 0; k < fm_->J.outerSize(); ++k)
    for (SpMat::InnerIterator it(fm_->J, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), N1 + static_cast<int>(it.col()),
                        it.value());
  for (int k = 0; k < M21.outerSize(); ++k)
    for (SpMat::InnerIterator it(M21, k); it; ++it)
      trip.emplace_back(N1 + static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
  for (int k = 0; k < M22.outerSize(); ++k)
    for (SpMat::InnerIterator it(M22, k); it; ++it)
      trip.emplace_back(N1 + static_cast<int>(it.row()), N1 + static_cast<int>(it.col()),
                        it.value());
  for (int k = 0; k < B_flow_.outerSize(); ++k)
    for (SpMat::InnerIterator it(B_flow_, k); it; ++it) {
      trip.emplace_back(N1 + static_cast<int>(it.row()), N1 + N2 + static_cast<int>(it.col()),
                        -it.value());
      trip.emplace_back(N1 + N2 + static_cast<int>(it.col()), N1 + static_cast<int>(it.row()),
                        it.value());
    }

  SpMat Jmat(size(), size());
  Jmat.setFromTriplets(trip.begin(), trip.end());
  Jmat.makeCompressed();

  Eigen::SparseLU<SpMat> lu;
  lu.compute(Jmat);
  if (lu.info() != Eigen::Success)
    throw ValidationError("singular Newton matrix in full-order solve");
  return lu.solve(-F);
}

StateVec FomSystem::restrict_full(const VecX& a1_full, const VecX& a2_full,
                                  const VecX& lambda) const {
  return {a1_full, a2_full, lambda};
}

double FomSystem::mass_residual(const StateVec& prev, const StateVec& cur,
                                double dt) const {
  return (fm_->Q_diag.cwiseProduct(cur.a1 - prev.a1) / dt + fm_->J * cur.a2).norm();
}

// ---------------------------------------------------------------------------
// ReducedSystem

ReducedSystem::ReducedSystem(const FemModel& fm, const PhysicsConfig& cfg,
                             const BoundarySchedule& bc, MatX V1, MatX V2,
                             BilinearForm form)
    : System(fm, cfg, bc, std::move(form)), V1_(std::move(V1)), V2_(std::move(V2)) {
  P2nodal_ = fm.E_map * V2_;
  Qr_ = V1_.transpose() * fm.Q_diag.asDiagonal() * V1_;
  Jr_ = V1_.transpose() * (fm.J * V2_);
  Wr_ = V2_.transpose() * (fm.W * V2_);
  auto [Bp, Bf] = split_boundary(fm, bc);
  Br_pot_ = V2_.transpose() * Bp;
  Br_flow_ = V2_.transpose() * Bf;
  Qr_llt_.compute(Qr_);
  Wr_llt_.compute(Wr_);
  if (Qr_llt_.info() != Eigen::Success || Wr_llt_.info() != Eigen::Success)
    throw ValidationError("reduced mass matrices are not positive definite");
}

ReducedSystem::ReducedNonlinears ReducedSystem::eval_nonlinears(const VecX& a1r,
                                                                const VecX& a2r,
                                                                bool want_jacobians) const {
  const int m = n1(), n = n2();
  ReducedNonlinears out;
  out.fa = VecX::Zero(n);
  out.fb = VecX::Zero(n);
  out.fg = VecX::Zero(n);
  if (want_jacobians) {
    out.dfa_d1 = MatX::Zero(n, m);
    out.dfa_d2 = MatX::Zero(n, n);
    out.dfb_d1 = MatX::Zero(n, m);
    out.dfb_d2 = MatX::Zero(n, n);
    out.dfg_d1 = MatX::Zero(n, m);
    out.dfg_d2 = MatX::Zero(n, n);
  }

  for (int k = 0; k < form_.size(); ++k) {
    const int i = form_.cells[k];
    const double rho = V1_.row(i).dot(a1r);
    const int dl = fm_->cell_dof_left[i];
    const int dr = fm_->cell_dof_right[i];
    const double ml = P2nodal_.row(dl).dot(a2r);
    const double mr = P2nodal_.row(dr).dot(a2r);
    const CellEval ce =
        eval_cell_nonlinear(*fm_, *cfg_, i, form_.weights[k], rho, ml, mr, want_jacobians);

    const auto rowL = P2nodal_.row(dl);
    const auto rowR = P2nodal_.row(dr);
    out.fa += ce.fa[0] * rowL.transpose() + ce.fa[1] * rowR.transpose();
    out.fb += ce.fb[0] * rowL.transpose() + ce.fb[1] * rowR.transpose();
    out.fg += ce.fg[0] * rowL.transpose() + ce.fg[1] * rowR.transpose();
    if (want_jacobians) {
      const auto rho_row = V1_.row(i);
      out.dfa_d1 += (ce.jac.dalpha_drho[0] * rowL.transpose() +
                     ce.jac.dalpha_drho[1] * rowR.transpose()) *
                    rho_row;
      out.dfb_d1 += (ce.jac.dbeta_drho[0] * rowL.transpose() +
                     ce.jac.dbeta_drho[1] * rowR.transpose()) *
                    rho_row;
      out.dfg_d1 += (ce.jac.dgamma_drho[0] * rowL.transpose() +
                     ce.jac.dgamma_drho[1] * rowR.transpose()) *
                    rho_row;
      out.dfa_d2 += rowL.transpose() * (ce.jac.dalpha_dm[0][0] * rowL + ce.jac.dalpha_dm[0][1] * rowR) +
                    rowR.transpose() * (ce.jac.dalpha_dm[1][0] * rowL + ce.jac.dalpha_dm[1][1] * rowR);
      out.dfb_d2 += rowL.transpose() * (ce.jac.dbeta_dm[0][0] * rowL + ce.jac.dbeta_dm[0][1] * rowR) +
                    rowR.transpose() * (ce.jac.dbeta_dm[1][0] * rowL + ce.jac.dbeta_dm[1][1] * rowR);
      out.dfg_d2 += rowL.transpose() * (ce.jac.dgamma_dm[0][0] * rowL + ce.jac.dgamma_dm[0][1] * rowR) +
                    rowR.transpose() * (ce.jac.dgamma_dm[1][0] * rowL + ce.jac.dgamma_dm[1][1] * rowR);
    }
  }
  return out;
}

VecX ReducedSystem::alpha_term(const VecX& x) const {
  const StateVec s = unpack(x);
  return eval_nonlinears(s.a1, s.a2, false).fa;
}

VecX ReducedSystem::residual(const VecX& x, const VecX* xprev, double t, double dt,
                             double homotopy, const VecX* falpha_prev) const {
  const StateVec s = unpack(x);
  const ReducedNonlinears nl = eval_nonlinears(s.a1, s.a2, false);
  const VecX u = blended_potentials(t, homotopy);
  const VecX g = blended_flows(t, homotopy);

  VecX F(size());
  VecX r2 = -nl.fb - nl.fg - Br_pot_ * u - Br_flow_ * s.lambda;
  if (xprev) {
    const StateVec sp = unpack(*xprev);
    F.head(n1()) = Qr_ * (s.a1 - sp.a1) / dt + Jr_ * s.a2;
    const VecX fap = falpha_prev ? *falpha_prev : alpha_term(*xprev);
    r2 += (nl.fa - fap) / dt;
  } else {
    F.head(n1()) = Jr_ * s.a2;
  }
  F.segment(n1(), n2()) = r2;
  F.tail(num_multipliers()) = Br_flow_.transpose() * s.a2 - g;
  return F;
}

VecX ReducedSystem::newton_direction(const VecX& x, const VecX* xprev, double t,
                                     double dt, double homotopy, const VecX& F) const {
  (void)t;
  (void)homotopy;
  const StateVec s = unpack(x);
  const ReducedNonlinears nl = eval_nonlinears(s.a1, s.a2, true);
  const double wa = xprev ? 1.0 / dt : 0.0;

  const int m = n1(), n = n2(), nf = num_multipliers();
  MatX Jmat = MatX::Zero(size(), size());
  if (xprev) Jmat.topLeftCorner(m, m) = Qr_ / dt;
  Jmat.block(0, m, m, n) = Jr_;
  Jmat.block(m, 0, n, m) = wa * nl.dfa_d1 - nl.dfb_d1 - nl.dfg_d1;
  Jmat.block(m, m, n, n) = wa * nl.dfa_d2 - nl.dfb_d2 - nl.dfg_d2;
  Jmat.block(m, m + n, n, nf) = -Br_flow_;
  Jmat.block(m + n, m, nf, n) = Br_flow_.transpose();

  Eigen::PartialPivLU<MatX> lu(Jmat);
  return lu.solve(-F);
}

StateVec ReducedSystem::restrict_full(const VecX& a1_full, const VecX& a2_full,
                                      const VecX& lambda) const {
  StateVec s;
  s.a1 = Qr_llt_.solve(V1_.transpose() * fm_->Q_diag.cwiseProduct(a1_full));
  s.a2 = Wr_llt_.solve(V2_.transpose() * (fm_->W * a2_full));
  s.lambda = lambda;
  return s;
}

double ReducedSystem::mass_residual(const StateVec& prev, const StateVec& cur,
                                    double dt) const {
  return (Qr_ * (cur.a1 - prev.a1) / dt + Jr_ * cur.a2).norm();
}

}  // namespace flownet
