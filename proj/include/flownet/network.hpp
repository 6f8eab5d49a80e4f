#pragma once

#include "flownet/types.hpp"

#include <string>
#include <vector>

namespace flownet {

enum class NodeKind { Interior, Boundary };

struct Node {
  NodeId id = -1;
  NodeKind kind = NodeKind::Interior;
};

struct Edge {
  EdgeId id = -1;
  NodeId from = -1;
  NodeId to = -1;
  double length = 0.0;    // [m]
  double diameter = 0.0;  // [m]

  double area() const;  // pi/4 * diameter^2 [m^2]
};

/// Directed pipe network. Immutable after construction; safe to share
/// read-only across threads.
class Network {
 public:
  Network(std::vector<Node> nodes, std::vector<Edge> edges,
          std::vector<NodeId> boundary_order);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Boundary node ids in the order that fixes the index i of the
  /// boundary operator and the input vector u.
  const std::vector<NodeId>& boundary_order() const { return boundary_order_; }

  const Node& node(NodeId id) const;
  const Edge& edge(EdgeId id) const;
  bool has_node(NodeId id) const;
  bool has_edge(EdgeId id) const;

  /// Edge ids adjacent to a node.
  const std::vector<EdgeId>& adjacent_edges(NodeId id) const;

  int num_interior_nodes() const { return num_interior_; }
  int num_boundary_nodes() const { return static_cast<int>(boundary_order_.size()); }

  /// Position of a boundary node in boundary_order(), or -1.
  int boundary_index(NodeId id) const;

  double total_length() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<NodeId> boundary_order_;
  std::vector<int> node_pos_;                    // id -> index into nodes_
  std::vector<int> edge_pos_;                    // id -> index into edges_
  std::vector<std::vector<EdgeId>> adjacency_;   // node index -> edge ids
  std::vector<int> boundary_pos_;                // node index -> boundary slot
  int num_interior_ = 0;

  void validate() const;
};

/// Signed area weight n^e[nu]: +A^e if e leaves nu, -A^e if e enters nu,
/// 0 if not adjacent. Throws ValidationError on unknown ids.
double incidence_weight(const Network& net, EdgeId e, NodeId nu);

/// dim(K) = |E| - |N_0|: number of independent edgewise-constant flux
/// patterns compatible with the interior coupling conditions. Depends on
/// the topology only.
int kernel_dimension(const Network& net);

/// Incidence-weight matrix over interior nodes: rows = interior nodes
/// (ascending id), columns = edges (file order), entries n^e[nu].
/// Its null space is the coefficient representation of the kernel space.
MatX interior_incidence_matrix(const Network& net);

/// Parse and validate a network from a JSON file (see README for the schema).
Network load_network(const std::string& path);

/// Same, from an in-memory JSON string.
Network parse_network(const std::string& json_text);

/// Serialize to the same JSON schema accepted by load_network.
std::string network_to_json(const Network& net);

}  // namespace flownet
