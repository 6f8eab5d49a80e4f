#include "flownet/benchmarks.hpp"

#include "flownet/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <vector>

namespace flownet {

using nlohmann::json;

Network make_diamond_network() {
  std::vector<Node> nodes;
  for (NodeId id = 1; id <= 6; ++id)
    nodes.push_back({id, (id <= 2) ? NodeKind::Boundary : NodeKind::Interior});
  // Lengths [km] {40, 38, 18, 15, 28, 27, 25}, diameters [m] {1.3, 1, 1, 1, 1.3, 1.3, 1}.
  std::vector<Edge> edges = {
      {1, 1, 3, 40e3, 1.3}, {2, 3, 4, 38e3, 1.0}, {3, 4, 6, 18e3, 1.0},
      {4, 6, 2, 15e3, 1.0}, {5, 3, 5, 28e3, 1.3}, {6, 5, 6, 27e3, 1.3},
      {7, 4, 5, 25e3, 1.0},
  };
  return Network(std::move(nodes), std::move(edges), {1, 2});
}

Network make_large38_network() {
  // Backbone path over interior nodes 101..120, six boundary spurs, and
  // thirteen chords. 26 nodes, 38 edges, 20 interior nodes.
  std::vector<Node> nodes;
  for (NodeId id = 101; id <= 120; ++id) nodes.push_back({id, NodeKind::Interior});
  for (NodeId id = 1; id <= 6; ++id) nodes.push_back({id, NodeKind::Boundary});

  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId id = 101; id < 120; ++id) pairs.emplace_back(id, id + 1);  // 19 backbone
  pairs.insert(pairs.end(), {{1, 101}, {2, 105}, {3, 110}, {4, 115}, {5, 120}, {6, 112}});
  pairs.insert(pairs.end(), {{101, 106},
                             {103, 109},
                             {104, 112},
                             {106, 116},
                             {107, 113},
                             {109, 118},
                             {111, 117},
                             {102, 110},
                             {105, 114},
                             {113, 119},
                             {108, 120},
                             {110, 116},
                             {103, 115}});

  // Deterministic lengths in [5, 74] km summing to 1008 km, and diameters
  // cycling through [0.4, 1] m.
  const double diam_cycle[7] = {1.0, 0.8, 0.6, 0.4, 0.9, 0.7, 0.5};
  std::vector<double> lengths_km;
  double sum = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    double l = 5.0 + static_cast<double>((17 * i + 11) % 45);
    lengths_km.push_back(l);
    sum += l;
  }
  // Rescale to the 1008 km total, then round to whole hundred meters.
  double total = 0.0;
  for (double& l : lengths_km) {
    l = std::max(5.0, std::min(74.0, l * 1008.0 / sum));
    l = std::round(l * 10.0) / 10.0;
    total += l;
  }
  // Absorb the rounding slack in the final backbone pipe.
  lengths_km[18] += 1008.0 - total;

  std::vector<Edge> edges;
  for (size_t i = 0; i < pairs.size(); ++i)
    edges.push_back({static_cast<EdgeId>(i + 1), pairs[i].first, pairs[i].second,
                     lengths_km[i] * 1e3, diam_cycle[i % 7]});
  return Network(std::move(nodes), std::move(edges), {1, 2, 3, 4, 5, 6});
}

namespace {

json op(const std::string& name, std::vector<json> args) {
  json a = json::array();
  for (auto& x : args) a.push_back(std::move(x));
  return json{{"op", name}, {"args", a}};
}

json hours() {
  // t / 3600: the large-network profiles are written in reference hours.
  return op("/", {"t", 3600.0});
}

json density_bc(NodeId node, const json& profile) {
  json b;
  b["node"] = node;
  b["type"] = "potential";
  b["given"] = "density";
  b["profile"] = profile;
  return b;
}

json massflow_bc(NodeId node, double signed_flow) {
  json b;
  b["node"] = node;
  b["type"] = "massflow";
  b["profile"] = signed_flow;
  return b;
}

json reference_physics_json() {
  return json{{"RT", 146594.0}, {"alpha", -3e-8}, {"rho_ref", 1.0}, {"flow_ref", 1.0}};
}

}  // namespace

std::string diamond_scenario_json(bool paper_scale, double lambda) {
  // Ramp profile: 5*(4t/t_h) until t_h/4, then 5*(2-4t/t_h) until 3/8 t_h,
  // constant 2.5 afterwards (t_h = 1 hour).
  json u;
  u["piecewise"] = json::array();
  u["piecewise"].push_back(json{{"until", 900.0}, {"expr", op("/", {"t", 180.0})}});
  u["piecewise"].push_back(
      json{{"until", 1350.0}, {"expr", op("-", {10.0, op("/", {"t", 180.0})})}});
  u["else"] = 2.5;

  json j;
  j["T_hours"] = 2.0;
  j["dt_seconds"] = paper_scale ? 1.0 : 30.0;
  j["physics"] = reference_physics_json();
  j["friction"] = {{"model", "turbulent"}, {"lambda", lambda}};
  j["boundary"] = json::array();
  j["boundary"].push_back(density_bc(1, op("+", {60.0, u})));
  // T m at the withdrawal node: the adjacent edge enters node 2, so the
  // prescribed A m = 200 kg/s appears with a negative sign.
  j["boundary"].push_back(massflow_bc(2, -200.0));
  j["initial"] = "steady";
  return j.dump(2) + "\n";
}

std::string large38_scenario_json(char variant, bool paper_scale) {
  const json th = hours();
  json u;
  if (variant == 'A' || variant == 'a') {
    // 6 exp(-3/2 t) + 4 cos(pi/2 t) + 3/2 sin(10 pi t), t in hours.
    u = op("+", {op("*", {6.0, op("exp", {op("*", {-1.5, th})})}),
                 op("*", {4.0, op("cos", {op("*", {1.5707963267948966, th})})}),
                 op("*", {1.5, op("sin", {op("*", {31.415926535897931, th})})})});
  } else if (variant == 'B' || variant == 'b') {
    // 8 t^3 exp(-t) - 4 (t - 2) f(3t) with f(s) = 1 - |(s mod 2) - 1|.
    const json term1 = op("*", {8.0, op("*", {th, th, th}), op("exp", {op("-", {th})})});
    const json fold =
        op("-", {1.0, op("abs", {op("-", {op("mod", {op("*", {3.0, th}), 2.0}), 1.0})})});
    const json term2 = op("*", {4.0, op("-", {th, 2.0}), fold});
    u = op("-", {term1, term2});
  } else {
    throw ValidationError("large38 scenario variant must be 'A' or 'B'");
  }

  json j;
  j["T_hours"] = paper_scale ? 5.0 : 2.0;
  j["dt_seconds"] = paper_scale ? 1.0 : 60.0;
  j["physics"] = reference_physics_json();
  j["friction"] = {{"model", "turbulent"}, {"lambda", 0.008}};
  j["boundary"] = json::array();
  j["boundary"].push_back(density_bc(1, op("+", {65.0, u})));
  j["boundary"].push_back(density_bc(2, op("+", {50.0, u})));
  j["boundary"].push_back(massflow_bc(3, -100.0));
  j["boundary"].push_back(density_bc(4, op("-", {60.0, u})));
  j["boundary"].push_back(density_bc(5, 60.0));
  j["boundary"].push_back(density_bc(6, 45.0));
  j["initial"] = "steady";
  return j.dump(2) + "\n";
}

}  // namespace flownet
