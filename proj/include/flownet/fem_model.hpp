#pragma once

#include "flownet/mesh.hpp"
#include "flownet/network.hpp"

#include <string>
#include <vector>

namespace flownet {

/// Mixed finite-element operators for the network flow problem.
///
/// Q_f is spanned by cell indicator functions (dimension N1 = #cells).
/// W_f is spanned by edgewise-continuous piecewise linears with the
/// interior-node coupling conditions eliminated (dimension N2 = N1 +
/// |E| - |N_0|). The elimination map `E_map` expresses every constrained
/// basis function in the unconstrained per-edge nodal basis; all
/// operators are assembled in the unconstrained basis and contracted
/// with E_map.
///
/// Immutable after assembly; safe to share read-only across threads.
struct FemModel {
  const Network* net = nullptr;
  Mesh mesh;

  int N1 = 0;          // dim(Q_f) = number of cells
  int N2 = 0;          // dim(W_f)
  int num_nodal = 0;   // unconstrained nodal dofs, sum over edges of (cells+1)

  VecX Q_diag;     // N1, entries A^e * dx_j
  SpMat W;         // N2 x N2 SPD mass matrix
  SpMat J;         // N1 x N2, <dx w^n, q^m>
  SpMat B;         // N2 x p boundary matrix, columns follow boundary_order
  SpMat E_map;     // num_nodal x N2 constrained-basis coefficients
  MatX Kbasis;     // N2 x dim(K), W-orthonormal basis of ker(J)

  // Flat per-cell data for assembly kernels (aligned with mesh.cells).
  std::vector<int> cell_dof_left;   // unconstrained nodal dof indices
  std::vector<int> cell_dof_right;
  VecX cell_area;      // A^e of the owning edge
  VecX cell_width;     // dx_j
  VecX cell_diameter;  // D^e of the owning edge
  std::vector<EdgeId> cell_edge;

  int kernel_dim() const { return static_cast<int>(Kbasis.cols()); }
  int num_boundary() const { return static_cast<int>(B.cols()); }

  /// Nodal values (unconstrained dofs) of the flux function with
  /// constrained coordinates a2.
  VecX nodal_values(const VecX& a2) const { return E_map * a2; }

  /// Constrained coordinates of a flux function given by nodal values that
  /// satisfy the coupling conditions (W-weighted least squares otherwise).
  VecX coords_from_nodal(const VecX& nodal) const;
};

/// Assemble all FOM operators for a mesh over a network.
FemModel assemble_operators(const Network& net, const Mesh& mesh);

/// Q_f-coefficients of dx m for m given by coordinates a2: Q^{-1} J a2.
VecX dx_coordinates(const FemModel& fm, const VecX& a2);

/// Write Q, W, J, B in matrix-market coordinate format into a directory.
void dump_matrices(const FemModel& fm, const std::string& directory);

}  // namespace flownet
