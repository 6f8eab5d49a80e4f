#include "flownet/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace flownet {

using nlohmann::json;

double Edge::area() const { return std::numbers::pi / 4.0 * diameter * diameter; }

Network::Network(std::vector<Node> nodes, std::vector<Edge> edges,
                 std::vector<NodeId> boundary_order)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      boundary_order_(std::move(boundary_order)) {
  NodeId max_node = -1;
  EdgeId max_edge = -1;
  for (const auto& n : nodes_) max_node = std::max(max_node, n.id);
  for (const auto& e : edges_) max_edge = std::max(max_edge, e.id);
  node_pos_.assign(static_cast<size_t>(max_node) + 1, -1);
  edge_pos_.assign(static_cast<size_t>(max_edge) + 1, -1);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id < 0) throw ValidationError("negative node id");
    if (node_pos_[nodes_[i].id] != -1)
      throw ValidationError("duplicate node id " + std::to_string(nodes_[i].id));
    node_pos_[nodes_[i].id] = static_cast<int>(i);
  }
  for (size_t i = 0; i < edges_.size(); ++i) {
    if (edges_[i].id < 0) throw ValidationError("negative edge id");
    if (edge_pos_[edges_[i].id] != -1)
      throw ValidationError("duplicate edge id " + std::to_string(edges_[i].id));
    edge_pos_[edges_[i].id] = static_cast<int>(i);
  }

  adjacency_.assign(nodes_.size(), {});
  for (const auto& e : edges_) {
    if (!has_node(e.from) || !has_node(e.to))
      throw ValidationError("edge " + std::to_string(e.id) + " references unknown node");
    adjacency_[node_pos_[e.from]].push_back(e.id);
    adjacency_[node_pos_[e.to]].push_back(e.id);
  }

  boundary_pos_.assign(nodes_.size(), -1);
  for (size_t i = 0; i < boundary_order_.size(); ++i) {
    if (!has_node(boundary_order_[i]))
      throw ValidationError("boundary_order references unknown node");
    boundary_pos_[node_pos_[boundary_order_[i]]] = static_cast<int>(i);
  }
  num_interior_ = 0;
  for (const auto& n : nodes_)
    if (n.kind == NodeKind::Interior) ++num_interior_;

  validate();
}

void Network::validate() const {
  if (nodes_.empty() || edges_.empty())
    throw ValidationError("network must have at least one node and one edge");

  for (const auto& e : edges_) {
    if (e.length <= 0.0)
      throw ValidationError("edge " + std::to_string(e.id) + " has nonpositive length");
    if (e.diameter <= 0.0)
      throw ValidationError("edge " + std::to_string(e.id) + " has nonpositive diameter");
    if (e.from == e.to)
      throw ValidationError("edge " + std::to_string(e.id) + " is a self-loop");
  }
  // Parallel edges are rejected: coupling would be ambiguous.
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& e : edges_) {
    auto key = std::minmax(e.from, e.to);
    if (!seen.insert({key.first, key.second}).second)
      throw ValidationError("parallel edge between nodes " + std::to_string(e.from) +
                            " and " + std::to_string(e.to));
  }

  // Boundary bookkeeping: boundary_order must enumerate exactly the
  // boundary-kind nodes, each of degree 1.
  std::set<NodeId> listed(boundary_order_.begin(), boundary_order_.end());
  if (listed.size() != boundary_order_.size())
    throw ValidationError("boundary_order contains duplicates");
  for (const auto& n : nodes_) {
    const bool is_bd = n.kind == NodeKind::Boundary;
    if (is_bd != (listed.count(n.id) > 0))
      throw ValidationError("boundary_order must list exactly the boundary nodes");
    if (is_bd && adjacency_[node_pos_[n.id]].size() != 1)
      throw ValidationError("boundary node " + std::to_string(n.id) +
                            " has degree " +
                            std::to_string(adjacency_[node_pos_[n.id]].size()) +
                            ", expected 1");
  }

  // Connectivity by BFS over the undirected graph.
  std::vector<char> visited(nodes_.size(), 0);
  std::vector<int> stack{0};
  visited[0] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (EdgeId eid : adjacency_[i]) {
      const Edge& e = edge(eid);
      for (NodeId nb : {e.from, e.to}) {
        int j = node_pos_[nb];
        if (!visited[j]) {
          visited[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  if (std::find(visited.begin(), visited.end(), 0) != visited.end())
    throw ValidationError("network graph is not connected");
}

bool Network::has_node(NodeId id) const {
  return id >= 0 && id < static_cast<int>(node_pos_.size()) && node_pos_[id] != -1;
}

bool Network::has_edge(EdgeId id) const {
  return id >= 0 && id < static_cast<int>(edge_pos_.size()) && edge_pos_[id] != -1;
}

const Node& Network::node(NodeId id) const {
  if (!has_node(id)) throw ValidationError("unknown node id " + std::to_string(id));
  return nodes_[node_pos_[id]];
}

const Edge& Network::edge(EdgeId id) const {
  if (!has_edge(id)) throw ValidationError("unknown edge id " + std::to_string(id));
  return edges_[edge_pos_[id]];
}

const std::vector<EdgeId>& Network::adjacent_edges(NodeId id) const {
  if (!has_node(id)) throw ValidationError("unknown node id " + std::to_string(id));
  return adjacency_[node_pos_[id]];
}

int Network::boundary_index(NodeId id) const {
  if (!has_node(id)) return -1;
  return boundary_pos_[node_pos_[id]];
}

double Network::total_length() const {
  double sum = 0.0;
  for (const auto& e : edges_) sum += e.length;
  return sum;
}

double incidence_weight(const Network& net, EdgeId e, NodeId nu) {
  const Edge& ed = net.edge(e);
  net.node(nu);  // id check
  if (ed.from == nu) return ed.area();
  if (ed.to == nu) return -ed.area();
  return 0.0;
}

MatX interior_incidence_matrix(const Network& net) {
  std::vector<NodeId> interior;
  for (const auto& n : net.nodes())
    if (n.kind == NodeKind::Interior) interior.push_back(n.id);
  std::sort(interior.begin(), interior.end());

  MatX N = MatX::Zero(static_cast<Eigen::Index>(interior.size()),
                      static_cast<Eigen::Index>(net.edges().size()));
  for (size_t r = 0; r < interior.size(); ++r)
    for (size_t c = 0; c < net.edges().size(); ++c)
      N(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          incidence_weight(net, net.edges()[c].id, interior[r]);
  return N;
}

int kernel_dimension(const Network& net) {
  return static_cast<int>(net.edges().size()) - net.num_interior_nodes();
}

namespace {

Network network_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") ||
      !j.contains("boundary_order"))
    throw ParseError("network JSON must contain nodes, edges, boundary_order");

  std::vector<Node> nodes;
  for (const auto& jn : j.at("nodes")) {
    Node n;
    n.id = jn.at("id").get<NodeId>();
    n.kind = jn.at("boundary").get<bool>() ? NodeKind::Boundary : NodeKind::Interior;
    nodes.push_back(n);
  }
  std::vector<Edge> edges;
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.id = je.at("id").get<EdgeId>();
    e.from = je.at("from").get<NodeId>();
    e.to = je.at("to").get<NodeId>();
    e.length = je.at("length_m").get<double>();
    e.diameter = je.at("diameter_m").get<double>();
    edges.push_back(e);
  }
  std::vector<NodeId> order = j.at("boundary_order").get<std::vector<NodeId>>();
  return Network(std::move(nodes), std::move(edges), std::move(order));
}

}  // namespace

Network parse_network(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("network JSON parse failure: ") + e.what());
  }
  try {
    return network_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("network JSON schema violation: ") + e.what());
  }
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string network_to_json(const Network& net) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : net.nodes())
    j["nodes"].push_back({{"id", n.id}, {"boundary", n.kind == NodeKind::Boundary}});
  j["edges"] = json::array();
  for (const auto& e : net.edges())
    j["edges"].push_back({{"id", e.id},
                          {"from", e.from},
                          {"to", e.to},
                          {"length_m", e.length},
                          {"diameter_m", e.diameter}});
  j["boundary_order"] = net.boundary_order();
  return j.dump(2) + "\n";
}

}  // namespace flownet
