#pragma once

#include "flownet/network.hpp"

#include <vector>

namespace flownet {

/// One mesh cell: a subinterval of a single edge.
struct Cell {
  EdgeId edge = -1;
  double x_left = 0.0;  // [m], measured from the edge tail
  double width = 0.0;   // [m]
};

/// Per-edge range of cell indices [begin, end).
struct CellRange {
  int begin = 0;
  int end = 0;
  int count() const { return end - begin; }
};

/// Partition of the network domain into per-edge uniform cells.
/// Cells are numbered edge by edge in edge file order.
struct Mesh {
  std::vector<Cell> cells;
  std::vector<CellRange> edge_ranges;  // aligned with Network::edges()

  int num_cells() const { return static_cast<int>(cells.size()); }
  const CellRange& range_for_edge_index(int edge_index) const {
    return edge_ranges.at(static_cast<size_t>(edge_index));
  }
};

/// Uniform per-edge mesh with ceil(l^e / dx_max) cells per edge; all widths
/// are <= dx_max.
Mesh build_mesh(const Network& net, double dx_max);

}  // namespace flownet
