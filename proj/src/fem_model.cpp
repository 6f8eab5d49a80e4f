#include "flownet/fem_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

namespace flownet {

namespace {

struct NodalLayout {
  std::vector<int> edge_offset;  // edge index -> first nodal dof
  int total = 0;

  int dof(int edge_index, int vertex) const { return edge_offset[edge_index] + vertex; }
};

NodalLayout make_layout(const Network& net, const Mesh& mesh) {
  NodalLayout layout;
  layout.edge_offset.resize(net.edges().size());
  int acc = 0;
  for (size_t k = 0; k < net.edges().size(); ++k) {
    layout.edge_offset[k] = acc;
    acc += mesh.edge_ranges[k].count() + 1;
  }
  layout.total = acc;
  return layout;
}

// Endpoint vertex of edge (by index) at node nu: 0 at the tail, last at the head.
int endpoint_vertex(const Network& net, const Mesh& mesh, int edge_index, NodeId nu) {
  const Edge& e = net.edges()[edge_index];
  if (e.from == nu) return 0;
  if (e.to == nu) return mesh.edge_ranges[edge_index].count();
  throw ValidationError("node not an endpoint of edge");
}

int edge_index_of(const Network& net, EdgeId id) {
  for (size_t k = 0; k < net.edges().size(); ++k)
    if (net.edges()[k].id == id) return static_cast<int>(k);
  throw ValidationError("unknown edge id");
}

void write_matrix_market(const SpMat& A, const std::string& path) {
  std::ofstream out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  out.precision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

}  // namespace

FemModel assemble_operators(const Network& net, const Mesh& mesh) {
  FemModel fm;
  fm.net = &net;
  fm.mesh = mesh;
  fm.N1 = mesh.num_cells();

  const NodalLayout layout = make_layout(net, mesh);
  fm.num_nodal = layout.total;

  // Per-cell flat data.
  fm.cell_dof_left.resize(mesh.cells.size());
  fm.cell_dof_right.resize(mesh.cells.size());
  fm.cell_area.resize(fm.N1);
  fm.cell_width.resize(fm.N1);
  fm.cell_diameter.resize(fm.N1);
  fm.cell_edge.resize(mesh.cells.size());
  for (size_t k = 0; k < net.edges().size(); ++k) {
    const Edge& e = net.edges()[k];
    const CellRange& r = mesh.edge_ranges[k];
    for (int j = r.begin; j < r.end; ++j) {
      const int v = j - r.begin;
      fm.cell_dof_left[j] = layout.dof(static_cast<int>(k), v);
      fm.cell_dof_right[j] = layout.dof(static_cast<int>(k), v + 1);
      fm.cell_area[j] = e.area();
      fm.cell_width[j] = mesh.cells[j].width;
      fm.cell_diameter[j] = e.diameter;
      fm.cell_edge[j] = e.id;
    }
  }

  fm.Q_diag = fm.cell_area.cwiseProduct(fm.cell_width);

  // Constrained basis: unit columns for interior vertices and boundary
  // endpoints, difference columns eliminating one coupling condition per
  // interior network node.
  std::vector<Triplet> etrip;
  int col = 0;
  for (size_t k = 0; k < net.edges().size(); ++k) {
    const int cells = mesh.edge_ranges[k].count();
    for (int v = 1; v < cells; ++v)
      etrip.emplace_back(layout.dof(static_cast<int>(k), v), col++, 1.0);
  }
  for (NodeId nu : net.boundary_order()) {
    const EdgeId eid = net.adjacent_edges(nu).front();
    const int k = edge_index_of(net, eid);
    etrip.emplace_back(layout.dof(k, endpoint_vertex(net, mesh, k, nu)), col++, 1.0);
  }

  struct NodeCoupling {
    NodeId node;
    std::vector<int> dofs;
    std::vector<double> weights;  // n^e[nu]
    int first_col = 0;
  };
  std::vector<NodeCoupling> couplings;
  {
    std::vector<NodeId> interior;
    for (const auto& n : net.nodes())
      if (n.kind == NodeKind::Interior) interior.push_back(n.id);
    std::sort(interior.begin(), interior.end());
    for (NodeId nu : interior) {
      NodeCoupling c;
      c.node = nu;
      std::vector<EdgeId> adj = net.adjacent_edges(nu);
      std::sort(adj.begin(), adj.end());
      for (EdgeId eid : adj) {
        const int k = edge_index_of(net, eid);
        c.dofs.push_back(layout.dof(k, endpoint_vertex(net, mesh, k, nu)));
        c.weights.push_back(incidence_weight(net, eid, nu));
      }
      c.first_col = col;
      for (size_t i = 1; i < c.dofs.size(); ++i) {
        etrip.emplace_back(c.dofs[0], col, 1.0 / c.weights[0]);
        etrip.emplace_back(c.dofs[i], col, -1.0 / c.weights[i]);
        ++col;
      }
      couplings.push_back(std::move(c));
    }
  }
  fm.N2 = col;
  fm.E_map.resize(layout.total, fm.N2);
  fm.E_map.setFromTriplets(etrip.begin(), etrip.end());

  // Unconstrained P1 mass and derivative pairing, then contraction.
  std::vector<Triplet> wtrip, jtrip;
  for (int j = 0; j < fm.N1; ++j) {
    const double a = fm.cell_area[j];
    const double h = fm.cell_width[j];
    const int dl = fm.cell_dof_left[j];
    const int dr = fm.cell_dof_right[j];
    const double c = a * h / 6.0;
    wtrip.emplace_back(dl, dl, 2.0 * c);
    wtrip.emplace_back(dr, dr, 2.0 * c);
    wtrip.emplace_back(dl, dr, c);
    wtrip.emplace_back(dr, dl, c);
    jtrip.emplace_back(j, dl, -a);
    jtrip.emplace_back(j, dr, a);
  }
  SpMat W_full(layout.total, layout.total);
  W_full.setFromTriplets(wtrip.begin(), wtrip.end());
  SpMat J_full(fm.N1, layout.total);
  J_full.setFromTriplets(jtrip.begin(), jtrip.end());

  fm.W = fm.E_map.transpose() * W_full * fm.E_map;
  fm.W.makeCompressed();
  fm.J = (J_full * fm.E_map).pruned(1e-300);
  fm.J.makeCompressed();

  // Boundary matrix: T w^n evaluated per boundary node.
  {
    const int p = net.num_boundary_nodes();
    SpMat S(layout.total, p);
    std::vector<Triplet> strip;
    for (int i = 0; i < p; ++i) {
      const NodeId nu = net.boundary_order()[i];
      const EdgeId eid = net.adjacent_edges(nu).front();
      const int k = edge_index_of(net, eid);
      strip.emplace_back(layout.dof(k, endpoint_vertex(net, mesh, k, nu)), i,
                         incidence_weight(net, eid, nu));
    }
    S.setFromTriplets(strip.begin(), strip.end());
    fm.B = fm.E_map.transpose() * S;
    fm.B.makeCompressed();
  }

  // Kernel basis: edgewise-constant flux patterns from the null space of
  // the interior incidence-weight matrix, lifted to constrained
  // coordinates, then W-orthonormalized.
  {
    const MatX N = interior_incidence_matrix(net);
    MatX beta;
    if (N.rows() == 0) {
      beta = MatX::Identity(static_cast<Eigen::Index>(net.edges().size()),
                            static_cast<Eigen::Index>(net.edges().size()));
    } else {
      Eigen::FullPivLU<MatX> lu(N);
      lu.setThreshold(1e-12);
      beta = lu.kernel();
    }
    const int kd = static_cast<int>(beta.cols());
    MatX K = MatX::Zero(fm.N2, kd);
    for (int c0 = 0; c0 < kd; ++c0) {
      // Interior-vertex and boundary-endpoint coefficients are the edge
      // values themselves; coupling columns are solved in closed form.
      int idx = 0;
      for (size_t k = 0; k < net.edges().size(); ++k) {
        const int cells = mesh.edge_ranges[k].count();
        for (int v = 1; v < cells; ++v) K(idx++, c0) = beta(static_cast<int>(k), c0);
      }
      for (NodeId nu : net.boundary_order()) {
        const EdgeId eid = net.adjacent_edges(nu).front();
        K(idx++, c0) = beta(edge_index_of(net, eid), c0);
      }
      for (const auto& cp : couplings) {
        std::vector<EdgeId> adj = net.adjacent_edges(cp.node);
        std::sort(adj.begin(), adj.end());
        for (size_t i = 1; i < adj.size(); ++i)
          K(idx++, c0) = -cp.weights[i] * beta(edge_index_of(net, adj[i]), c0);
      }
    }
    // W-orthonormalize (twice for stability).
    for (int pass = 0; pass < 2 && kd > 0; ++pass) {
      MatX G = K.transpose() * (fm.W * K);
      Eigen::LLT<MatX> llt(G);
      if (llt.info() != Eigen::Success)
        throw ValidationError("kernel basis W-Gram not positive definite");
      llt.matrixU().solveInPlace<Eigen::OnTheRight>(K);
    }
    fm.Kbasis = K;
  }

  return fm;
}

VecX FemModel::coords_from_nodal(const VecX& nodal) const {
  // E^T E is SPD (block diagonal); exact when nodal satisfies the couplings.
  SpMat G = SpMat(E_map.transpose()) * E_map;
  Eigen::SimplicialLLT<SpMat> llt(G);
  return llt.solve(E_map.transpose() * nodal);
}

VecX dx_coordinates(const FemModel& fm, const VecX& a2) {
  return (fm.J * a2).cwiseQuotient(fm.Q_diag);
}

void dump_matrices(const FemModel& fm, const std::string& directory) {
  std::filesystem::create_directories(directory);
  SpMat Q(fm.N1, fm.N1);
  std::vector<Triplet> t;
  for (int i = 0; i < fm.N1; ++i) t.emplace_back(i, i, fm.Q_diag[i]);
  Q.setFromTriplets(t.begin(), t.end());
  write_matrix_market(Q, directory + "/Q.mtx");
  write_matrix_market(fm.W, directory + "/W.mtx");
  write_matrix_market(fm.J, directory + "/J.mtx");
  write_matrix_market(fm.B, directory + "/B.mtx");
}

}  // namespace flownet
