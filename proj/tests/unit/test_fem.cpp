#include <doctest.h>

#include "flownet/benchmarks.hpp"
#include "flownet/fem_model.hpp"
#include "flownet/nonlinear.hpp"

#include "test_helpers.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <random>

using namespace flownet;

namespace {

int rank_svd(const MatX& A) {
  Eigen::JacobiSVD<MatX> svd(A);
  if (svd.singularValues().size() == 0) return 0;
  const double tol = 1e-12 * svd.singularValues().maxCoeff();
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > tol) ++r;
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("fem");

TEST_CASE("single-edge single-cell operators match the symbolic integrals") {
  Network net = testutil::single_edge(1.0, 2.0);
  FemModel fm = assemble_operators(net, build_mesh(net, 200.0));
  REQUIRE(fm.N1 == 1);
  REQUIRE(fm.N2 == 2);
  CHECK(fm.Q_diag[0] == doctest::Approx(2.0));

  MatX J = MatX(fm.J);
  CHECK(J(0, 0) == doctest::Approx(-2.0));
  CHECK(J(0, 1) == doctest::Approx(2.0));

  // A * integral of hat products over [0,1].
  MatX W = MatX(fm.W);
  CHECK(W(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(W(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(W(1, 1) == doctest::Approx(2.0 / 3.0));

  MatX B = MatX(fm.B);
  CHECK(B(0, 0) == doctest::Approx(2.0));   // edge leaves node 1
  CHECK(B(1, 1) == doctest::Approx(-2.0));  // edge enters node 2

  // dx_coordinates on the assembled 1x2 example.
  VecX a2(2);
  a2 << 0.0, 1.0;
  CHECK(dx_coordinates(fm, a2)[0] == doctest::Approx(1.0));
}

TEST_CASE("assembled dimensions and compatibility invariants") {
  for (const Network& net : {make_diamond_network(), testutil::two_edge_path(),
                             testutil::triangle_with_spur()}) {
    FemModel fm = assemble_operators(net, build_mesh(net, net.total_length() / 23.0));
    CHECK(fm.N2 == fm.N1 + kernel_dimension(net));
    CHECK(fm.Q_diag.minCoeff() > 0.0);

    // W is SPD: sparse Cholesky must succeed.
    Eigen::SimplicialLLT<SpMat> llt(fm.W);
    CHECK(llt.info() == Eigen::Success);

    // A1: dx is surjective onto Q_f. A2: the kernel basis spans ker(J).
    MatX Jd = MatX(fm.J);
    CHECK(rank_svd(Jd) == fm.N1);
    CHECK(fm.kernel_dim() == kernel_dimension(net));
    CHECK((Jd * fm.Kbasis).cwiseAbs().maxCoeff() < 1e-12);

    // Kernel basis is W-orthonormal.
    MatX G = fm.Kbasis.transpose() * fm.W * fm.Kbasis;
    CHECK((G - MatX::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() < 1e-12);

    // Kernel coordinates map to zero derivative coefficients.
    for (int c = 0; c < fm.kernel_dim(); ++c)
      CHECK(dx_coordinates(fm, fm.Kbasis.col(c)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dx_coordinates is exact for linear flux profiles") {
  Network net = testutil::single_edge(3.0, 1.5);
  FemModel fm = assemble_operators(net, build_mesh(net, 0.4));
  // Nodal values of m(x) = 0.7 x + 0.2; on a single edge every nodal dof is free.
  VecX nodal(fm.num_nodal);
  const auto& r = fm.mesh.edge_ranges[0];
  for (int j = r.begin; j < r.end; ++j) {
    nodal[fm.cell_dof_left[j]] = 0.7 * fm.mesh.cells[j].x_left + 0.2;
    nodal[fm.cell_dof_right[j]] =
        0.7 * (fm.mesh.cells[j].x_left + fm.mesh.cells[j].width) + 0.2;
  }
  VecX a2 = fm.coords_from_nodal(nodal);
  VecX slope = dx_coordinates(fm, a2);
  for (int i = 0; i < fm.N1; ++i) CHECK(slope[i] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("nonlinear vectors vanish as required for zero flux") {
  Network net = make_diamond_network();
  FemModel fm = assemble_operators(net, build_mesh(net, 5e3));
  PhysicsConfig cfg = testutil::paper_physics();

  VecX a1 = VecX::Constant(fm.N1, 1.0);  // rho = rho_star
  VecX a2 = VecX::Zero(fm.N2);
  NonlinearVectors f = assemble_nonlinear(fm, cfg, a1, a2, full_form(fm));
  CHECK(f.f_alpha.cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.f_gamma.cwiseAbs().maxCoeff() == 0.0);

  // f_beta = P'(rho_star) * J^T 1 for constant density and zero flux.
  VecX expected = dP(cfg, 1.0) * (fm.J.transpose() * VecX::Ones(fm.N1));
  CHECK((f.f_beta - expected).cwiseAbs().maxCoeff() < 1e-12 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("full form equals the all-cells area-weighted rule") {
  Network net = testutil::triangle_with_spur();
  FemModel fm = assemble_operators(net, build_mesh(net, 0.35));
  PhysicsConfig cfg = testutil::paper_physics();

  std::mt19937 gen(7);
  std::uniform_real_distribution<double> d(0.5, 2.0);
  VecX a1(fm.N1);
  for (int i = 0; i < fm.N1; ++i) a1[i] = 40.0 + d(gen);
  VecX a2(fm.N2);
  for (int i = 0; i < fm.N2; ++i) a2[i] = d(gen);

  QuadratureRule exact;
  exact.cells = full_form(fm).cells;
  exact.weights = fm.cell_area;

  NonlinearVectors f_full = assemble_nonlinear(fm, cfg, a1, a2, full_form(fm));
  NonlinearVectors f_rule = assemble_nonlinear(fm, cfg, a1, a2, exact.form());
  CHECK((f_full.f_alpha - f_rule.f_alpha).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f_full.f_beta - f_rule.f_beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f_full.f_gamma - f_rule.f_gamma).cwiseAbs().maxCoeff() == 0.0);

  const VecX nodal = fm.nodal_values(a2);
  CHECK(hamiltonian_value(fm, cfg, a1, nodal, full_form(fm)) ==
        hamiltonian_value(fm, cfg, a1, nodal, exact.form()));
  CHECK(dissipation_value(fm, cfg, a1, nodal, full_form(fm)) ==
        dissipation_value(fm, cfg, a1, nodal, exact.form()));
}

TEST_CASE("nonpositive density raises DomainError with the cell id") {
  Network net = testutil::single_edge(1.0, 1.0);
  FemModel fm = assemble_operators(net, build_mesh(net, 0.3));
  PhysicsConfig cfg = testutil::paper_physics();
  VecX a1 = VecX::Constant(fm.N1, 50.0);
  a1[1] = -2.0;
  VecX a2 = VecX::Zero(fm.N2);
  try {
    assemble_nonlinear(fm, cfg, a1, a2, full_form(fm));
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.cell == 1);
  }
}

TEST_CASE("order-3 Gauss assembly matches a dense reference quadrature") {
  // Positive flux keeps all integrands polynomial; a 7-point test-side rule
  // is then far beyond exactness.
  Network net = testutil::single_edge(2.0, 1.3);
  FemModel fm = assemble_operators(net, build_mesh(net, 0.5));
  PhysicsConfig cfg = testutil::paper_physics();

  VecX rho(fm.N1);
  for (int i = 0; i < fm.N1; ++i) rho[i] = 55.0 + 3.0 * std::sin(1.0 + i);
  VecX nodal(fm.num_nodal);
  for (int i = 0; i < fm.num_nodal; ++i) nodal[i] = 120.0 + 15.0 * std::cos(0.3 * i);

  NodalNonlinears f = assemble_nonlinear_nodal(fm, cfg, rho, nodal, full_form(fm));

  // Gauss-Legendre 7 on [0,1].
  const double gx[7] = {0.0254460438286207, 0.1292344072003028, 0.2970774243113014,
                        0.5,                0.7029225756886985, 0.8707655927996972,
                        0.9745539561713793};
  const double gw[7] = {0.0647424830844349, 0.1398526957446383, 0.1909150252525595,
                        0.2089795918367347, 0.1909150252525595, 0.1398526957446383,
                        0.0647424830844349};

  VecX fa = VecX::Zero(fm.num_nodal), fb = VecX::Zero(fm.num_nodal),
       fg = VecX::Zero(fm.num_nodal);
  for (int i = 0; i < fm.N1; ++i) {
    const double A = fm.cell_area[i], h = fm.cell_width[i];
    const int dl = fm.cell_dof_left[i], dr = fm.cell_dof_right[i];
    for (int g = 0; g < 7; ++g) {
      const double x = gx[g], w = gw[g] * h * A;
      const double m = nodal[dl] * (1 - x) + nodal[dr] * x;
      const double phi = dP(cfg, rho[i]) + m * m / (2 * rho[i] * rho[i]);
      const double rm =
          friction_rm(cfg, fm.cell_edge[i], fm.cell_diameter[i], rho[i], m).rm;
      const double bas[2] = {1 - x, x};
      const int dof[2] = {dl, dr};
      const double dxw[2] = {-1.0 / h, 1.0 / h};
      for (int d = 0; d < 2; ++d) {
        fa[dof[d]] += w * (m / rho[i]) * bas[d];
        fb[dof[d]] += w * phi * dxw[d];
        fg[dof[d]] -= w * rm * bas[d];
      }
    }
  }
  CHECK((f.f_alpha - fa).norm() <= 1e-12 * fa.norm());
  CHECK((f.f_beta - fb).norm() <= 1e-12 * fb.norm());
  CHECK((f.f_gamma - fg).norm() <= 1e-12 * fg.norm());
}

TEST_SUITE_END();
