#include "flownet/quadrature_training.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>

namespace flownet {

namespace {

// Same Gauss rule as the assembly kernels.
constexpr int kGauss = 3;
const double kGx[kGauss] = {0.5 - std::sqrt(15.0) / 10.0, 0.5,
                            0.5 + std::sqrt(15.0) / 10.0};
const double kGw[kGauss] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

}  // namespace

NonlinearSnapshotData build_nonlinear_snapshots(const FemModel& fm,
                                                const PhysicsConfig& cfg,
                                                const SnapshotSet& snaps,
                                                const ReductionBasis& basis) {
  const int L = snaps.count();
  const int n2 = static_cast<int>(basis.V2.cols());
  const int J = fm.N1;
  if (L < 1) throw ValidationError("empty snapshot set");

  int pairs = 0;
  for (int l = 1; l < L; ++l)
    if (snaps.segment[l] == snaps.segment[l - 1]) ++pairs;
  const int rows = (2 * L + pairs) * n2;

  NonlinearSnapshotData data;
  data.A.resize(rows, J);
  data.b.resize(rows);
  data.tags.reserve(rows);

  const MatX Wb = fm.E_map * basis.V2;    // nodal values of the flux basis
  const MatX Mn = fm.E_map * snaps.S2;    // nodal flux values per snapshot

  int row = 0;
  auto emit = [&](char mapping, int snap, int basisfn, const VecX& cellvals) {
    data.A.row(row) = cellvals.transpose();
    data.b[row] = cellvals.dot(fm.cell_area);
    data.tags.push_back({mapping, snap, basisfn});
    ++row;
  };

  // Pressure-flux integrand (P'(rho) + m^2/(2 rho^2)) dx w_j.
  for (int l = 0; l < L; ++l) {
    VecX phibar(J);
    for (int i = 0; i < J; ++i) {
      const double rho = snaps.S1(i, l);
      if (!(rho > 0.0) || !cfg.admissible(rho))
        throw DomainError("nonpositive snapshot density on cell " + std::to_string(i), i);
      const double ml = Mn(fm.cell_dof_left[i], l);
      const double mr = Mn(fm.cell_dof_right[i], l);
      const double dPr = dP(cfg, rho);
      double acc = 0.0;
      for (int g = 0; g < kGauss; ++g) {
        const double mg = ml * (1.0 - kGx[g]) + mr * kGx[g];
        acc += kGw[g] * (dPr + mg * mg / (2.0 * rho * rho));
      }
      phibar[i] = acc;
    }
    for (int jb = 0; jb < n2; ++jb) {
      VecX vals(J);
      for (int i = 0; i < J; ++i)
        vals[i] = (Wb(fm.cell_dof_right[i], jb) - Wb(fm.cell_dof_left[i], jb)) * phibar[i];
      emit('b', l, jb, vals);
    }
  }

  // Friction integrand r(rho, m) m w_j.
  for (int l = 0; l < L; ++l) {
    for (int jb = 0; jb < n2; ++jb) {
      VecX vals(J);
      for (int i = 0; i < J; ++i) {
        const double rho = snaps.S1(i, l);
        const double ml = Mn(fm.cell_dof_left[i], l);
        const double mr = Mn(fm.cell_dof_right[i], l);
        const double wl = Wb(fm.cell_dof_left[i], jb);
        const double wr = Wb(fm.cell_dof_right[i], jb);
        double acc = 0.0;
        for (int g = 0; g < kGauss; ++g) {
          const double mg = ml * (1.0 - kGx[g]) + mr * kGx[g];
          const double wg = wl * (1.0 - kGx[g]) + wr * kGx[g];
          acc += kGw[g] *
                 friction_r(cfg, fm.cell_edge[i], fm.cell_diameter[i], rho, mg) * mg * wg;
        }
        vals[i] = fm.cell_width[i] * acc;
      }
      emit('g', l, jb, vals);
    }
  }

  // Velocity differences between consecutive snapshots of one segment.
  for (int l = 1; l < L; ++l) {
    if (snaps.segment[l] != snaps.segment[l - 1]) continue;
    const double dt = snaps.stamps[l] - snaps.stamps[l - 1];
    if (!(dt > 0.0)) throw ValidationError("snapshot stamps must increase within a segment");
    for (int jb = 0; jb < n2; ++jb) {
      VecX vals(J);
      for (int i = 0; i < J; ++i) {
        const double rho1 = snaps.S1(i, l - 1), rho2 = snaps.S1(i, l);
        const double ml1 = Mn(fm.cell_dof_left[i], l - 1), mr1 = Mn(fm.cell_dof_right[i], l - 1);
        const double ml2 = Mn(fm.cell_dof_left[i], l), mr2 = Mn(fm.cell_dof_right[i], l);
        const double wl = Wb(fm.cell_dof_left[i], jb);
        const double wr = Wb(fm.cell_dof_right[i], jb);
        double acc = 0.0;
        for (int g = 0; g < kGauss; ++g) {
          const double m1 = ml1 * (1.0 - kGx[g]) + mr1 * kGx[g];
          const double m2 = ml2 * (1.0 - kGx[g]) + mr2 * kGx[g];
          const double wg = wl * (1.0 - kGx[g]) + wr * kGx[g];
          acc += kGw[g] * ((m2 / rho2 - m1 / rho1) / dt) * wg;
        }
        vals[i] = fm.cell_width[i] * acc;
      }
      emit('v', l, jb, vals);
    }
  }

  return data;
}

VecX nnls(const MatX& A, const VecX& b, double kkt_tol) {
  const int n = static_cast<int>(A.cols());
  VecX x = VecX::Zero(n);
  std::vector<char> passive(n, 0);
  std::vector<int> P;
  const double scale = std::max(1.0, (A.transpose() * b).cwiseAbs().maxCoeff());

  auto ls_on_passive = [&]() {
    MatX Ap(A.rows(), P.size());
    for (size_t c = 0; c < P.size(); ++c) Ap.col(c) = A.col(P[c]);
    return VecX(Ap.colPivHouseholderQr().solve(b));
  };

  const int max_outer = 3 * n + 30;
  for (int outer = 0; outer < max_outer; ++outer) {
    const VecX w = A.transpose() * (b - A * x);
    int jbest = -1;
    double wbest = kkt_tol * scale;
    for (int j = 0; j < n; ++j)
      if (!passive[j] && w[j] > wbest) {
        wbest = w[j];
        jbest = j;
      }
    if (jbest < 0) break;
    passive[jbest] = 1;
    P.push_back(jbest);

    for (int inner = 0; inner < max_outer; ++inner) {
      const VecX z = ls_on_passive();
      double zmin = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < P.size(); ++c) zmin = std::min(zmin, z[c]);
      if (zmin > 0.0) {
        x.setZero();
        for (size_t c = 0; c < P.size(); ++c) x[P[c]] = z[c];
        break;
      }
      // Step to the feasible boundary and drop zeroed entries.
      double alpha = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < P.size(); ++c)
        if (z[c] <= 0.0) alpha = std::min(alpha, x[P[c]] / (x[P[c]] - z[c]));
      for (size_t c = 0; c < P.size(); ++c) x[P[c]] += alpha * (z[c] - x[P[c]]);
      std::vector<int> keep;
      for (size_t c = 0; c < P.size(); ++c) {
        if (x[P[c]] > 1e-14 * scale) {
          keep.push_back(P[c]);
        } else {
          x[P[c]] = 0.0;
          passive[P[c]] = 0;
        }
      }
      P = keep;
      if (P.empty()) break;
    }
  }
  return x;
}

McMatrix mc_matrix(const ReductionBasis& basis, const FemModel& fm,
                   const QuadratureRule& rule) {
  const int n1 = static_cast<int>(basis.V1.cols());
  const int n2 = static_cast<int>(basis.V2.cols());
  McMatrix mc;
  mc.Qc = MatX::Zero(n1, n1);
  mc.Wc = MatX::Zero(n2, n2);
  const MatX Wb = fm.E_map * basis.V2;
  for (size_t k = 0; k < rule.cells.size(); ++k) {
    const int i = rule.cells[k];
    const double xi = rule.weights[static_cast<Eigen::Index>(k)];
    const double h = fm.cell_width[i];
    mc.Qc += xi * h * basis.V1.row(i).transpose() * basis.V1.row(i);
    const auto rl = Wb.row(fm.cell_dof_left[i]);
    const auto rr = Wb.row(fm.cell_dof_right[i]);
    mc.Wc += xi * h / 6.0 *
             (2.0 * rl.transpose() * rl + rl.transpose() * rr + rr.transpose() * rl +
              2.0 * rr.transpose() * rr);
  }
  return mc;
}

SpectrumCheck spectrum_check(const McMatrix& mc, double C_tilde) {
  SpectrumCheck out;
  Eigen::SelfAdjointEigenSolver<MatX> eq(mc.Qc), ew(mc.Wc);
  if (eq.info() != Eigen::Success || ew.info() != Eigen::Success) return out;
  out.min_eig = std::min(eq.eigenvalues().minCoeff(), ew.eigenvalues().minCoeff());
  out.max_eig = std::max(eq.eigenvalues().maxCoeff(), ew.eigenvalues().maxCoeff());
  out.cond = out.min_eig > 0.0 ? out.max_eig / out.min_eig
                               : std::numeric_limits<double>::infinity();
  const double lo = 1.0 / (C_tilde * C_tilde);
  const double hi = C_tilde * C_tilde;
  out.pass = out.min_eig >= lo && out.max_eig <= hi;
  return out;
}

QuadratureRule greedy_quadrature(const NonlinearSnapshotData& data, int n_c,
                                 double C_tilde, const FemModel& fm,
                                 const ReductionBasis& basis, GreedyReport* report,
                                 bool normalize_rows) {
  const int J = static_cast<int>(data.A.cols());
  if (n_c < 1) throw ValidationError("n_c must be at least 1");
  n_c = std::min(n_c, J);

  MatX A = data.A;
  VecX b = data.b;
  if (normalize_rows) {
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      const double s = std::max(std::hypot(A.row(r).norm(), b[r]), 1e-300);
      A.row(r) /= s;
      b[r] /= s;
    }
  }

  VecX xi = VecX::Zero(J);
  std::vector<char> active(J, 0);
  std::vector<int> order;
  GreedyReport rep;
  rep.requested_nc = n_c;

  auto solve_on_active = [&]() {
    MatX Ar(A.rows(), order.size());
    for (size_t c = 0; c < order.size(); ++c) Ar.col(c) = A.col(order[c]);
    const VecX z = nnls(Ar, b);
    xi.setZero();
    for (size_t c = 0; c < order.size(); ++c) xi[order[c]] = z[static_cast<Eigen::Index>(c)];
  };

  int rounds = 0;
  while (true) {
    for (; rounds < n_c; ++rounds) {
      const VecX grad = 2.0 * A.transpose() * (A * xi - b);
      int jmax = -1;
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < J; ++j)
        if (!active[j] && -grad[j] > best) {
          best = -grad[j];
          jmax = j;  // ties resolve to the smallest index by scan order
        }
      if (jmax < 0) break;
      active[jmax] = 1;
      order.push_back(jmax);
      solve_on_active();
      rep.objective_history.push_back((A * xi - b).squaredNorm());
    }

    QuadratureRule rule;
    rule.C_tilde = C_tilde;
    for (int j : order)
      if (xi[j] > 0.0) {
        rule.cells.push_back(j);
      }
    std::sort(rule.cells.begin(), rule.cells.end());
    rule.weights.resize(static_cast<Eigen::Index>(rule.cells.size()));
    for (size_t k = 0; k < rule.cells.size(); ++k)
      rule.weights[static_cast<Eigen::Index>(k)] = xi[rule.cells[k]];

    const SpectrumCheck sc = spectrum_check(mc_matrix(basis, fm, rule), C_tilde);
    if (sc.pass || rounds >= J) {
      if (!sc.pass)
        throw ValidationError(
            "quadrature training exhausted all cells without meeting the "
            "spectrum bound (degenerate basis)");
      rule.cond_Mc = sc.cond;
      rep.final_nc = rounds;
      rep.active_size = static_cast<int>(rule.cells.size());
      if (report) *report = rep;
      return rule;
    }
    // Safeguard: extend the budget by one active cell and keep the weights.
    n_c = rounds + 1;
  }
}

std::unique_ptr<ReducedSystem> project_crom(const FemModel& fm, const PhysicsConfig& cfg,
                                            const BoundarySchedule& bc,
                                            const ReductionBasis& basis,
                                            const QuadratureRule& rule) {
  const SpectrumCheck sc = spectrum_check(mc_matrix(basis, fm, rule), rule.C_tilde);
  if (!sc.pass)
    throw ValidationError("quadrature rule fails the spectrum bound (cond " +
                          std::to_string(sc.cond) + ")");
  return std::make_unique<ReducedSystem>(fm, cfg, bc, basis.V1, basis.V2, rule.form());
}

}  // namespace flownet
