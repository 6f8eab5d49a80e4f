#include "flownet/mesh.hpp"

#include <cmath>

namespace flownet {

Mesh build_mesh(const Network& net, double dx_max) {
  if (dx_max <= 0.0) throw ValidationError("dx_max must be positive");
  Mesh mesh;
  mesh.edge_ranges.reserve(net.edges().size());
  for (const auto& e : net.edges()) {
    const int count = static_cast<int>(std::ceil(e.length / dx_max - 1e-12));
    const int n = std::max(count, 1);
    const double h = e.length / n;
    CellRange range{mesh.num_cells(), mesh.num_cells() + n};
    for (int j = 0; j < n; ++j) mesh.cells.push_back({e.id, j * h, h});
    mesh.edge_ranges.push_back(range);
  }
  return mesh;
}

}  // namespace flownet
