#include <doctest.h>

#include "flownet/benchmarks.hpp"
#include "flownet/network.hpp"

#include "test_helpers.hpp"

#include <Eigen/SVD>

using namespace flownet;

TEST_SUITE_BEGIN("net");

TEST_CASE("diamond network loads with expected counts") {
  Network net = make_diamond_network();
  std::string text = network_to_json(net);
  Network reloaded = parse_network(text);
  CHECK(reloaded.edges().size() == 7);
  CHECK(reloaded.num_interior_nodes() == 4);
  CHECK(reloaded.num_boundary_nodes() == 2);
  CHECK(reloaded.total_length() == doctest::Approx(191e3));
}

TEST_CASE("single edge with two boundary nodes is the smallest valid graph") {
  Network net = testutil::single_edge();
  CHECK(net.num_interior_nodes() == 0);
  CHECK(net.edges().size() == 1);
}

TEST_CASE("boundary node of degree two is rejected") {
  // Node 2 is marked boundary but touches two edges.
  CHECK_THROWS_AS(Network({{1, NodeKind::Boundary}, {2, NodeKind::Boundary}, {3, NodeKind::Boundary}},
                          {{1, 1, 2, 1.0, 1.0}, {2, 2, 3, 1.0, 1.0}}, {1, 2, 3}),
                  ValidationError);
}

TEST_CASE("nonpositive geometry and degenerate edges are rejected") {
  CHECK_THROWS_AS(Network({{1, NodeKind::Boundary}, {2, NodeKind::Boundary}},
                          {{1, 1, 2, -1.0, 1.0}}, {1, 2}),
                  ValidationError);
  CHECK_THROWS_AS(Network({{1, NodeKind::Boundary}, {2, NodeKind::Boundary}},
                          {{1, 1, 2, 1.0, 0.0}}, {1, 2}),
                  ValidationError);
  // Self-loop.
  CHECK_THROWS_AS(Network({{1, NodeKind::Boundary}, {2, NodeKind::Interior}},
                          {{1, 2, 2, 1.0, 1.0}, {2, 1, 2, 1.0, 1.0}}, {1}),
                  ValidationError);
  // Parallel edges.
  CHECK_THROWS_AS(Network({{1, NodeKind::Boundary}, {2, NodeKind::Boundary}},
                          {{1, 1, 2, 1.0, 1.0}, {2, 1, 2, 2.0, 1.0}}, {1, 2}),
                  ValidationError);
}

TEST_CASE("disconnected graph is rejected") {
  CHECK_THROWS_AS(Network({{1, NodeKind::Boundary},
                           {2, NodeKind::Boundary},
                           {3, NodeKind::Boundary},
                           {4, NodeKind::Boundary}},
                          {{1, 1, 2, 1.0, 1.0}, {2, 3, 4, 1.0, 1.0}}, {1, 2, 3, 4}),
                  ValidationError);
}

TEST_CASE("incidence weight signs and values on the diamond") {
  Network net = make_diamond_network();
  // e1 = (nu1, nu3) with D = 1.3.
  const double a = std::numbers::pi / 4.0 * 1.69;
  CHECK(incidence_weight(net, 1, 1) == doctest::Approx(a).epsilon(1e-12));
  CHECK(incidence_weight(net, 1, 1) == doctest::Approx(1.32732).epsilon(1e-5));
  CHECK(incidence_weight(net, 1, 3) == doctest::Approx(-a).epsilon(1e-12));
  CHECK(incidence_weight(net, 1, 6) == 0.0);
  CHECK_THROWS_AS(incidence_weight(net, 99, 1), ValidationError);
}

TEST_CASE("incidence weight is antisymmetric under edge reversal") {
  Network net = make_diamond_network();
  std::vector<Edge> edges = net.edges();
  std::swap(edges[2].from, edges[2].to);
  Network reversed(net.nodes(), edges, net.boundary_order());
  for (NodeId nu : {3, 4, 5, 6})
    CHECK(incidence_weight(reversed, 3, nu) == doctest::Approx(-incidence_weight(net, 3, nu)));
}

namespace {

// Rank-nullity oracle on the interior incidence matrix: the space of
// edgewise-constant patterns with vanishing weighted node sums.
int kernel_dim_svd_oracle(const Network& net) {
  MatX N = interior_incidence_matrix(net);
  if (N.rows() == 0) return static_cast<int>(N.cols());
  Eigen::JacobiSVD<MatX> svd(N);
  const double tol = 1e-12 * svd.singularValues().maxCoeff();
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > tol) ++rank;
  return static_cast<int>(N.cols()) - rank;
}

}  // namespace

TEST_CASE("kernel dimension matches the SVD oracle") {
  CHECK(kernel_dimension(make_diamond_network()) == 3);
  CHECK(kernel_dim_svd_oracle(make_diamond_network()) == 3);
  CHECK(kernel_dimension(testutil::single_edge()) == 1);
  CHECK(kernel_dimension(testutil::two_edge_path()) == 1);
  CHECK(kernel_dim_svd_oracle(testutil::two_edge_path()) == 1);
  CHECK(kernel_dimension(testutil::triangle_with_spur()) ==
        kernel_dim_svd_oracle(testutil::triangle_with_spur()));
}

TEST_CASE("large38 network satisfies the stated statistics") {
  Network net = make_large38_network();
  CHECK(net.edges().size() == 38);
  CHECK(net.num_boundary_nodes() == 6);
  CHECK(std::abs(net.total_length() - 1008e3) / 1008e3 < 0.05);
  for (const auto& e : net.edges()) {
    CHECK(e.diameter >= 0.4);
    CHECK(e.diameter <= 1.0);
    CHECK(e.length >= 5e3);
    CHECK(e.length <= 74e3);
  }
}

TEST_CASE("network JSON round trip is faithful") {
  Network net = make_large38_network();
  Network again = parse_network(network_to_json(net));
  CHECK(again.edges().size() == net.edges().size());
  CHECK(again.boundary_order() == net.boundary_order());
  CHECK(again.total_length() == doctest::Approx(net.total_length()));
}

TEST_CASE("malformed JSON raises ParseError") {
  CHECK_THROWS_AS(parse_network("{not json"), ParseError);
  CHECK_THROWS_AS(parse_network("{\"nodes\": []}"), ParseError);
}

TEST_SUITE_END();
