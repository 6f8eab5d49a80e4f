#include <doctest.h>

#include "flownet/baselines.hpp"
#include "flownet/benchmarks.hpp"
#include "flownet/error_metric.hpp"
#include "flownet/pod.hpp"

#include "test_helpers.hpp"

#include <filesystem>
#include <random>

using namespace flownet;

namespace {

MatX random_matrix(int rows, int cols, std::mt19937& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  MatX m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d(gen);
  return m;
}

SnapshotSet random_snapshots(const FemModel& fm, int L, std::mt19937& gen) {
  SnapshotSet s;
  s.S1 = random_matrix(fm.N1, L, gen);
  s.S2 = random_matrix(fm.N2, L, gen);
  for (int l = 0; l < L; ++l) {
    s.stamps.push_back(l);
    s.segment.push_back(0);
  }
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("mor");

TEST_CASE("weighted projection: orthonormal case, idempotence, M-orthogonality") {
  std::mt19937 gen(11);
  // M = I with orthonormal V reduces to V V^T x.
  MatX V = random_matrix(6, 2, gen);
  Eigen::HouseholderQR<MatX> qr(V);
  V = qr.householderQ() * MatX::Identity(6, 2);
  const VecX x = random_matrix(6, 1, gen);
  const MatX I6 = MatX::Identity(6, 6);
  CHECK((weighted_projection(I6, V, x) - V * (V.transpose() * x)).norm() < 1e-13);

  // Idempotence on the subspace.
  const VecX in_span = V * random_matrix(2, 1, gen);
  CHECK((weighted_projection(I6, V, in_span) - in_span).norm() < 1e-12);

  // Random SPD weight: the residual is M-orthogonal to the subspace.
  const MatX R = random_matrix(6, 6, gen);
  const MatX M = R.transpose() * R + 6.0 * I6;
  const VecX proj = weighted_projection(M, V, x);
  CHECK((V.transpose() * M * (x - proj)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("constrained PCA recovers a single density mode exactly") {
  Network net = testutil::two_edge_path();
  FemModel fm = assemble_operators(net, build_mesh(net, 0.35));
  std::mt19937 gen(3);

  SnapshotSet snaps;
  const VecX mode = random_matrix(fm.N1, 1, gen);
  const VecX coef = random_matrix(8, 1, gen);
  snaps.S1 = mode * coef.transpose();
  snaps.S2 = MatX::Zero(fm.N2, 8);
  for (int l = 0; l < 8; ++l) {
    snaps.stamps.push_back(l);
    snaps.segment.push_back(0);
  }

  ReductionBasis basis = compatible_pod(fm, snaps, 1);
  const double obj = pod_objective_flux_form(fm, snaps, basis.V1, basis.V2);
  CHECK(obj <= 1e-20 * snaps.S1.squaredNorm());
  CHECK(check_compatibility(fm, basis).pass);
}

TEST_CASE("training objective equals the discarded singular values") {
  Network net = testutil::triangle_with_spur();
  FemModel fm = assemble_operators(net, build_mesh(net, 0.9));  // small N1
  std::mt19937 gen(17);
  SnapshotSet snaps = random_snapshots(fm, 8, gen);

  for (int n1 = 1; n1 <= std::min(4, fm.N1); ++n1) {
    ReductionBasis basis = compatible_pod(fm, snaps, n1);
    const double tail = singular_tail(basis.singular_values, n1);
    const double obj_deriv = pod_objective_derivative_form(fm, snaps, basis.V1);
    const double obj_flux = pod_objective_flux_form(fm, snaps, basis.V1, basis.V2);
    const double scale = basis.singular_values.squaredNorm();
    CHECK(std::abs(obj_deriv - tail) <= 1e-10 * scale);
    CHECK(std::abs(obj_flux - tail) <= 1e-10 * scale);
    CHECK(check_compatibility(fm, basis).pass);
  }

  // Monotonicity of the optimum in n1.
  double prev = std::numeric_limits<double>::infinity();
  for (int n1 = 1; n1 <= std::min(4, fm.N1); ++n1) {
    ReductionBasis basis = compatible_pod(fm, snaps, n1);
    const double obj = pod_objective_flux_form(fm, snaps, basis.V1, basis.V2);
    CHECK(obj <= prev + 1e-12 * (1.0 + std::abs(prev)));
    prev = obj;
  }
}

TEST_CASE("requesting more modes than the numerical rank names the rank") {
  Network net = testutil::two_edge_path();
  FemModel fm = assemble_operators(net, build_mesh(net, 0.6));
  std::mt19937 gen(5);
  SnapshotSet snaps;
  snaps.S1 = random_matrix(fm.N1, 1, gen) * random_matrix(1, 6, gen);  // rank 1
  snaps.S2 = MatX::Zero(fm.N2, 6);
  for (int l = 0; l < 6; ++l) {
    snaps.stamps.push_back(l);
    snaps.segment.push_back(0);
  }
  try {
    compatible_pod(fm, snaps, 3);
    FAIL("expected rank error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("rank is 1") != std::string::npos);
  }
}

TEST_CASE("identity bases are compatible; block POD is not") {
  Network net = make_diamond_network();
  FemModel fm = assemble_operators(net, build_mesh(net, 4000.0));

  ReductionBasis identity;
  identity.V1 = MatX::Identity(fm.N1, fm.N1);
  identity.V2 = MatX::Identity(fm.N2, fm.N2);
  CHECK(check_compatibility(fm, identity).pass);

  // Snapshots from an actual simulation.
  Scenario sc = parse_scenario(diamond_scenario_json(false, 0.01));
  sc.T = 1800.0;
  BoundarySchedule bc(sc, net);
  FomSystem sys(fm, sc.physics, bc);
  Trajectory traj = simulate(sys, sc);
  REQUIRE(!traj.breakdown);
  SnapshotSet snaps = collect_snapshots(lift_trajectory(sys, traj), 30);

  ReductionBasis bp = block_pod(fm, snaps, 8);
  const CompatibilityReport rep = check_compatibility(fm, bp);
  CHECK(!rep.pass);
  CHECK(rep.range_defect > 1e-6);

  ReductionBasis good = compatible_pod(fm, snaps, 4);
  CHECK(check_compatibility(fm, good).pass);
  CHECK(check_compatibility(fm, good).worst() <= 1e-10);

  // project_rom accepts the compatible basis and rejects the other one.
  CHECK_NOTHROW(project_rom(fm, sc.physics, bc, good));
  CHECK_THROWS_AS(project_rom(fm, sc.physics, bc, bp), ValidationError);
}

TEST_CASE("diamond scalar product splits kernel and derivative parts") {
  Network net = make_diamond_network();
  FemModel fm = assemble_operators(net, build_mesh(net, 8000.0));
  std::mt19937 gen(23);

  // Kernel inputs reduce to the plain L2 product.
  const VecX k1 = fm.Kbasis * random_matrix(fm.kernel_dim(), 1, gen);
  const VecX k2 = fm.Kbasis * random_matrix(fm.kernel_dim(), 1, gen);
  CHECK(kernel_derivative_product(fm, k1, k2) ==
        doctest::Approx(k1.dot(fm.W * k2)).epsilon(1e-12));

  // Kernel-orthogonal inputs reduce to the derivative product.
  VecX w = random_matrix(fm.N2, 1, gen);
  w -= fm.Kbasis * (fm.Kbasis.transpose() * (fm.W * w));
  VecX wt = random_matrix(fm.N2, 1, gen);
  wt -= fm.Kbasis * (fm.Kbasis.transpose() * (fm.W * wt));
  const VecX jw = fm.J * w, jwt = fm.J * wt;
  CHECK(kernel_derivative_product(fm, w, wt) ==
        doctest::Approx(jw.dot(jwt.cwiseQuotient(fm.Q_diag))).epsilon(1e-10));

  // Positive definiteness: the Gram matrix of random vectors is SPD.
  const MatX X = random_matrix(fm.N2, 6, gen);
  MatX G(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) G(i, j) = kernel_derivative_product(fm, X.col(i), X.col(j));
  Eigen::LLT<MatX> llt(0.5 * (G + G.transpose()));
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("projection equivalence identity holds on the diamond model") {
  Network net = make_diamond_network();
  FemModel fm = assemble_operators(net, build_mesh(net, 8000.0));
  std::mt19937 gen(31);

  // Kernel input: both routes vanish.
  const VecX km = fm.Kbasis * random_matrix(fm.kernel_dim(), 1, gen);
  auto [da, db] = projection_equivalence_check(fm, km, random_matrix(fm.N1, 2, gen));
  CHECK(da <= 1e-10);
  CHECK(db <= 1e-10);

  // Full space: both routes vanish.
  const VecX m = random_matrix(fm.N2, 1, gen);
  auto [fa, fb] = projection_equivalence_check(fm, m, MatX::Identity(fm.N1, fm.N1));
  CHECK(fa <= 1e-9 * m.norm());
  CHECK(fb <= 1e-9 * m.norm());

  // Random inputs and low-dimensional subspaces: the two routes agree.
  for (int trial = 0; trial < 10; ++trial) {
    const VecX mr = random_matrix(fm.N2, 1, gen);
    const MatX Qt = random_matrix(fm.N1, 2, gen);
    auto [ra, rb] = projection_equivalence_check(fm, mr, Qt);
    CHECK(std::abs(ra - rb) <= 1e-10 * std::max(1.0, std::max(ra, rb)));
  }
}

TEST_CASE("reduced model keeps conservation and energy structure") {
  Network net = make_diamond_network();
  Scenario sc = parse_scenario(diamond_scenario_json(false, 0.01));
  FemModel fm = assemble_operators(net, build_mesh(net, 2000.0));
  BoundarySchedule bc(sc, net);
  FomSystem fom(fm, sc.physics, bc);

  Trajectory ftraj = simulate(fom, sc);
  REQUIRE(!ftraj.breakdown);
  SnapshotSet snaps = collect_snapshots(lift_trajectory(fom, ftraj), 100);

  ReductionBasis basis = compatible_pod(fm, snaps, 7);
  auto rom = project_rom(fm, sc.physics, bc, basis);
  StateVec init = rom->restrict_full(ftraj.states.front().a1, ftraj.states.front().a2,
                                     ftraj.states.front().lambda);
  Trajectory rtraj = simulate(*rom, sc, init);
  REQUIRE(!rtraj.breakdown);

  for (int k = 1; k < rtraj.num_states(); ++k)
    CHECK(rtraj.monitors.mass_residual[k] <= 1e-8);
  for (double dv : rtraj.monitors.dissipation) CHECK(dv >= 0.0);
  for (double mn : rtraj.monitors.min_density) CHECK(mn > 0.0);

  // Reduction error against the FOM reference is small for the trained case.
  const double et = error_metric_ET(fm, lift_trajectory(fom, ftraj),
                                    lift_trajectory(*rom, rtraj));
  CHECK(et < 5e-2);

  // The projection error is a lower bound up to roundoff.
  const double ep = error_metric_ET(
      fm, lift_trajectory(fom, ftraj),
      project_trajectory(fm, basis.V1, basis.V2, lift_trajectory(fom, ftraj)));
  CHECK(ep <= et + 1e-12);
}

TEST_CASE("POD projection error matches the singular-value formula per snapshot") {
  Network net = make_diamond_network();
  Scenario sc = parse_scenario(diamond_scenario_json(false, 0.01));
  sc.T = 1800.0;
  FemModel fm = assemble_operators(net, build_mesh(net, 4000.0));
  BoundarySchedule bc(sc, net);
  FomSystem fom(fm, sc.physics, bc);
  Trajectory traj = simulate(fom, sc);
  REQUIRE(!traj.breakdown);
  LiftedTrajectory lifted = lift_trajectory(fom, traj);
  SnapshotSet snaps = collect_snapshots(lifted, 20);

  const int n = 6;
  ReductionBasis bp = block_pod(fm, snaps, 2 * n);

  // Per-snapshot squared projection error from the right singular vectors:
  // ||s_l - Pi s_l||^2 = sum_{i>n} sigma_i^2 (z_i)_l^2 per block.
  const MatX G1 = snaps.S1.transpose() * fm.Q_diag.asDiagonal() * snaps.S1;
  const MatX G2 = snaps.S2.transpose() * (fm.W * snaps.S2);
  Eigen::SelfAdjointEigenSolver<MatX> e1(G1), e2(G2);
  const int L = snaps.count();

  LiftedTrajectory snap_traj;
  LiftedTrajectory proj_traj;
  for (int l = 0; l < L; ++l) {
    snap_traj.times.push_back(l);
    snap_traj.a1.push_back(snaps.S1.col(l));
    snap_traj.a2.push_back(snaps.S2.col(l));
  }
  proj_traj = project_trajectory(fm, bp.V1, bp.V2, snap_traj);

  double max_err_expected = 0.0, max_ref = 0.0;
  for (int l = 0; l < L; ++l) {
    double err2 = 0.0;
    for (int i = 0; i < L - n; ++i) {  // ascending order: the first L-n are the tail
      err2 += std::max(0.0, e1.eigenvalues()[i]) * e1.eigenvectors()(l, i) *
              e1.eigenvectors()(l, i);
      err2 += std::max(0.0, e2.eigenvalues()[i]) * e2.eigenvectors()(l, i) *
              e2.eigenvectors()(l, i);
    }
    max_err_expected = std::max(max_err_expected, std::sqrt(err2));
    max_ref = std::max(max_ref, state_norm(fm, snaps.S1.col(l), snaps.S2.col(l)));
  }
  const double et = error_metric_ET(fm, snap_traj, proj_traj);
  CHECK(et == doctest::Approx(max_err_expected / max_ref).epsilon(1e-8));
}

TEST_CASE("basis files round trip") {
  Network net = testutil::triangle_with_spur();
  FemModel fm = assemble_operators(net, build_mesh(net, 0.5));
  std::mt19937 gen(41);
  SnapshotSet snaps = random_snapshots(fm, 6, gen);
  ReductionBasis basis = compatible_pod(fm, snaps, 2);

  const std::string prefix =
      (std::filesystem::temp_directory_path() / "flownet_basis_test").string();
  save_basis(basis, prefix, matrix_hash(snaps.S1, snaps.S2));
  ReductionBasis again = load_basis(prefix);
  CHECK((again.V1 - basis.V1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((again.V2 - basis.V2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(again.kind == basis.kind);
  CHECK((again.singular_values - basis.singular_values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
