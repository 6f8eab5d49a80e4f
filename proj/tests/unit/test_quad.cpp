#include <doctest.h>

#include "flownet/benchmarks.hpp"
#include "flownet/error_metric.hpp"
#include "flownet/quadrature_training.hpp"

#include "test_helpers.hpp"

#include <random>

using namespace flownet;

namespace {

struct DiamondTraining {
  Network net = make_diamond_network();
  Scenario sc;
  FemModel fm;
  BoundarySchedule bc;
  FomSystem fom;
  Trajectory traj;
  SnapshotSet snaps;
  ReductionBasis basis;

  DiamondTraining(double dx, int L, int n1, double T = 0.0)
      : sc(parse_scenario(diamond_scenario_json(false, 0.01))),
        fm(assemble_operators(net, build_mesh(net, dx))),
        bc(sc, net),
        fom(fm, sc.physics, bc) {
    if (T > 0.0) sc.T = T;
    traj = simulate(fom, sc);
    snaps = collect_snapshots(lift_trajectory(fom, traj), L);
    basis = compatible_pod(fm, snaps, n1);
  }
};

VecX brute_force_nnls(const MatX& A, const VecX& b) {
  const int n = static_cast<int>(A.cols());
  VecX best = VecX::Zero(n);
  double best_f = b.squaredNorm();
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j)
      if (mask & (1 << j)) idx.push_back(j);
    MatX Ap(A.rows(), idx.size());
    for (size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
    const VecX z = Ap.colPivHouseholderQr().solve(b);
    if ((z.array() < 0.0).any()) continue;
    const double f = (Ap * z - b).squaredNorm();
    if (f < best_f) {
      best_f = f;
      best.setZero();
      for (size_t c = 0; c < idx.size(); ++c) best[idx[c]] = z[static_cast<Eigen::Index>(c)];
    }
  }
  return best;
}

}  // namespace

TEST_SUITE_BEGIN("quad");

TEST_CASE("nonlinear snapshot rows: count, zero-flux structure, b consistency") {
  DiamondTraining d(4000.0, 12, 3, 1800.0);
  NonlinearSnapshotData data = build_nonlinear_snapshots(d.fm, d.sc.physics, d.snaps, d.basis);

  const int L = d.snaps.count();
  const int n2 = static_cast<int>(d.basis.V2.cols());
  CHECK(data.rows() == (3 * L - 1) * n2);

  // Row/b consistency: the full integral is the area-weighted row action.
  for (int r = 0; r < data.rows(); ++r) {
    const double via_row = data.A.row(r).dot(d.fm.cell_area);
    CHECK(std::abs(via_row - data.b[r]) <= 1e-12 * (1.0 + std::abs(data.b[r])));
  }

  // All-zero flux kills the friction and velocity-difference rows.
  SnapshotSet zf = d.snaps;
  zf.S2.setZero();
  for (auto& s : zf.S1.reshaped()) s = 60.0;
  NonlinearSnapshotData z = build_nonlinear_snapshots(d.fm, d.sc.physics, zf, d.basis);
  for (int r = 0; r < z.rows(); ++r) {
    if (z.tags[r].mapping == 'g' || z.tags[r].mapping == 'v') {
      CHECK(z.A.row(r).cwiseAbs().maxCoeff() == 0.0);
      CHECK(z.b[r] == 0.0);
    }
  }
}

TEST_CASE("snapshot segmentation controls the difference rows") {
  DiamondTraining d(8000.0, 6, 2, 900.0);
  SnapshotSet two = d.snaps;
  two.segment = {0, 0, 0, 1, 1, 1};  // two trajectories: 2*(L-1) - ... = 4 pairs
  NonlinearSnapshotData data = build_nonlinear_snapshots(d.fm, d.sc.physics, two, d.basis);
  const int n2 = static_cast<int>(d.basis.V2.cols());
  CHECK(data.rows() == (2 * 6 + 4) * n2);
}

TEST_CASE("greedy picks the closed-form single-cell rule for constant integrands") {
  // J cells of width h on one unit-area edge; f = 1 gives row entries h and
  // full integral J h, so one cell with weight J is exact.
  const int J = 7;
  const double h = 0.25;
  Network net = testutil::single_edge(J * h, 1.0);
  FemModel fm = assemble_operators(net, build_mesh(net, h));
  REQUIRE(fm.N1 == J);

  SnapshotSet snaps;
  snaps.S1 = MatX::Constant(fm.N1, 2, 60.0);
  snaps.S2 = MatX::Zero(fm.N2, 2);
  snaps.stamps = {0.0, 1.0};
  snaps.segment = {0, 0};
  ReductionBasis basis = compatible_pod(fm, snaps, 1);

  NonlinearSnapshotData data;
  data.A = MatX::Constant(1, J, h);
  data.b = VecX::Constant(1, J * h);
  data.tags.push_back({'b', 0, 0});

  GreedyReport rep;
  QuadratureRule rule = greedy_quadrature(data, 1, 1e6, fm, basis, &rep);
  REQUIRE(rule.cells.size() == 1);
  CHECK(rule.cells[0] == 0);  // tie resolves to the smallest cell index
  CHECK(rule.weights[0] == doctest::Approx(static_cast<double>(J)).epsilon(1e-12));
  CHECK(rep.objective_history.back() <= 1e-20);
}

TEST_CASE("full-budget training represents nonnegative data exactly") {
  DiamondTraining d(8000.0, 6, 2, 900.0);
  NonlinearSnapshotData data = build_nonlinear_snapshots(d.fm, d.sc.physics, d.snaps, d.basis);
  GreedyReport rep;
  QuadratureRule rule = greedy_quadrature(data, d.fm.N1, 10.0, d.fm, d.basis, &rep);
  // The exact weights xi = A are feasible, so the optimum is zero up to
  // the scaled KKT stopping tolerance of the active-set solve.
  CHECK(rep.objective_history.back() <= 1e-9 * data.b.squaredNorm());
  // Greedy objective is monotone non-increasing.
  for (size_t k = 1; k < rep.objective_history.size(); ++k)
    CHECK(rep.objective_history[k] <=
          rep.objective_history[k - 1] * (1.0 + 1e-12) + 1e-300);
  for (Eigen::Index i = 0; i < rule.weights.size(); ++i) CHECK(rule.weights[i] > 0.0);
}

TEST_CASE("nnls matches KKT cases and the brute-force oracle") {
  // b in the cone of the columns: exact fit.
  std::mt19937 gen(29);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  MatX A(8, 3);
  for (auto& v : A.reshaped()) v = dist(gen);
  VecX xtrue(3);
  xtrue << 0.5, 1.5, 0.25;
  VecX x = nnls(A, A * xtrue);
  CHECK((A * x - A * xtrue).norm() <= 1e-10);

  // Single column with a^T b < 0: the origin is KKT.
  VecX a(4), bneg(4);
  a << 1, 2, 0.5, 1;
  bneg << -1, -1, -0.5, -2;
  CHECK(nnls(MatX(a), bneg).cwiseAbs().maxCoeff() == 0.0);

  // Random instances against exhaustive active-set enumeration.
  std::mt19937 g2(101);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    MatX R(20, 5);
    for (auto& v : R.reshaped()) v = nd(g2);
    VecX b(20);
    for (auto& v : b.reshaped()) v = nd(g2);
    const VecX xs = nnls(R, b);
    const VecX xb = brute_force_nnls(R, b);
    const double fs = (R * xs - b).squaredNorm();
    const double fb = (R * xb - b).squaredNorm();
    CHECK(fs <= fb + 1e-8 * (1.0 + fb));
    // KKT residual: gradient nonnegative off-support, zero on support.
    const VecX w = R.transpose() * (b - R * xs);
    for (int j = 0; j < 5; ++j) {
      if (xs[j] > 0.0)
        CHECK(std::abs(w[j]) <= 1e-8);
      else
        CHECK(w[j] <= 1e-8);
    }
  }
}

TEST_CASE("exact-area rule reproduces the identity mass matrix and the ROM") {
  DiamondTraining d(2000.0, 40, 6, 3600.0);

  QuadratureRule exact;
  exact.cells = full_form(d.fm).cells;
  exact.weights = d.fm.cell_area;
  exact.C_tilde = 10.0;

  McMatrix mc = mc_matrix(d.basis, d.fm, exact);
  CHECK((mc.Qc - MatX::Identity(mc.Qc.rows(), mc.Qc.cols())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mc.Wc - MatX::Identity(mc.Wc.rows(), mc.Wc.cols())).cwiseAbs().maxCoeff() < 1e-12);
  SpectrumCheck sc = spectrum_check(mc, 10.0);
  CHECK(sc.pass);
  CHECK(sc.cond == doctest::Approx(1.0).epsilon(1e-10));

  // Empty rule: zero matrix, fail.
  QuadratureRule empty;
  empty.weights = VecX();
  McMatrix mce = mc_matrix(d.basis, d.fm, empty);
  CHECK(!spectrum_check(mce, 10.0).pass);

  // CROM with the exact rule follows the ROM trajectory.
  auto rom = project_rom(d.fm, d.sc.physics, d.bc, d.basis);
  auto crom = project_crom(d.fm, d.sc.physics, d.bc, d.basis, exact);
  StateVec init = rom->restrict_full(d.traj.states.front().a1, d.traj.states.front().a2,
                                     d.traj.states.front().lambda);
  Trajectory rt = simulate(*rom, d.sc, init);
  Trajectory ct = simulate(*crom, d.sc, init);
  REQUIRE(!rt.breakdown);
  REQUIRE(!ct.breakdown);
  CHECK(error_metric_ET(d.fm, lift_trajectory(*rom, rt), lift_trajectory(*crom, ct)) <=
        1e-8);
}

TEST_CASE("trained diamond rule meets the spectrum bound and runs stably") {
  DiamondTraining d(2000.0, 60, 6, 3600.0);
  NonlinearSnapshotData data = build_nonlinear_snapshots(d.fm, d.sc.physics, d.snaps, d.basis);

  GreedyReport rep;
  QuadratureRule rule = greedy_quadrature(data, 16, 10.0, d.fm, d.basis, &rep);
  CHECK(static_cast<int>(rule.cells.size()) <= rep.final_nc);
  SpectrumCheck sc = spectrum_check(mc_matrix(d.basis, d.fm, rule), 10.0);
  CHECK(sc.pass);
  CHECK(rule.cond_Mc == doctest::Approx(sc.cond));

  auto crom = project_crom(d.fm, d.sc.physics, d.bc, d.basis, rule);
  StateVec init = crom->restrict_full(d.traj.states.front().a1, d.traj.states.front().a2,
                                      d.traj.states.front().lambda);
  Trajectory ct = simulate(*crom, d.sc, init);
  CHECK(!ct.breakdown);
  for (double dv : ct.monitors.dissipation) CHECK(dv >= 0.0);
  for (int k = 1; k < ct.num_states(); ++k) CHECK(ct.monitors.mass_residual[k] <= 1e-8);

  // A rule that obviously violates the bound is rejected by the factory.
  QuadratureRule bad = rule;
  bad.weights *= 1e6;
  CHECK_THROWS_AS(project_crom(d.fm, d.sc.physics, d.bc, d.basis, bad), ValidationError);
}

TEST_CASE("safeguard extends n_c until the spectrum bound holds") {
  DiamondTraining d(4000.0, 30, 4, 1800.0);
  NonlinearSnapshotData data = build_nonlinear_snapshots(d.fm, d.sc.physics, d.snaps, d.basis);
  GreedyReport rep;
  QuadratureRule rule = greedy_quadrature(data, 1, 10.0, d.fm, d.basis, &rep);
  CHECK(rep.requested_nc == 1);
  CHECK(rep.final_nc > 1);
  CHECK(spectrum_check(mc_matrix(d.basis, d.fm, rule), 10.0).pass);
}

TEST_CASE("greedy objective is tracked against the exhaustive optimum on tiny data") {
  // Small enough to enumerate: J = 10 columns, n_c = 2.
  std::mt19937 gen(77);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  MatX A(40, 10);
  for (auto& v : A.reshaped()) v = dist(gen);
  VecX xi_true = VecX::Zero(10);
  xi_true[2] = 1.0;
  xi_true[7] = 2.0;
  VecX b = A * xi_true;
  b += 0.05 * VecX::Ones(40);  // keep the optimum slightly off the cone

  NonlinearSnapshotData data;
  data.A = A;
  data.b = b;

  // Exhaustive optimum over all supports of size <= 2.
  double best = b.squaredNorm();
  for (int i = 0; i < 10; ++i)
    for (int j = i; j < 10; ++j) {
      MatX Ap(40, j == i ? 1 : 2);
      Ap.col(0) = A.col(i);
      if (j != i) Ap.col(1) = A.col(j);
      VecX z = nnls(Ap, b);
      best = std::min(best, (Ap * z - b).squaredNorm());
    }

  Network net = testutil::single_edge(10.0, 1.0);
  FemModel fm = assemble_operators(net, build_mesh(net, 1.0));
  SnapshotSet snaps;
  snaps.S1 = MatX::Constant(fm.N1, 2, 50.0);
  snaps.S2 = MatX::Zero(fm.N2, 2);
  snaps.stamps = {0.0, 1.0};
  snaps.segment = {0, 0};
  ReductionBasis basis = compatible_pod(fm, snaps, 1);

  GreedyReport rep;
  greedy_quadrature(data, 2, 1e9, fm, basis, &rep);
  const double greedy_f = rep.objective_history[1];
  CHECK(greedy_f >= best - 1e-12);
  const double factor = best > 1e-14 ? greedy_f / best : 1.0;
  MESSAGE("greedy/exhaustive objective factor: ", factor);
  CHECK(factor <= 10.0);  // heuristic quality guard, not an optimality claim
}

TEST_SUITE_END();
