#pragma once

#include "flownet/pod.hpp"

namespace flownet {

/// Separate PCA per block: density modes in the Q norm, flux modes in the
/// W norm, n1 = n2 = n/2. No compatibility conditions are imposed; the
/// result generally fails check_compatibility.
ReductionBasis block_pod(const FemModel& fm, const SnapshotSet& snaps, int n);

/// Pointwise oblique-projection operator for one nonlinearity.
struct DeimOperator {
  MatX U;                    // Euclidean-orthonormal snapshot modes
  std::vector<int> indices;  // greedy interpolation rows
  MatX interp;               // U (P^T U)^{-1}
  std::string target;        // "alpha" | "beta-tilde" | "beta" | "gamma"
};

/// Classical greedy residual-max point selection over the snapshot modes.
/// Throws ValidationError when n_c exceeds the snapshot rank.
DeimOperator deim_train(const MatX& snapshots, int n_c, const std::string& target);

/// U (P^T U)^{-1} applied to the values at the selected rows.
VecX deim_apply(const DeimOperator& op, const VecX& values_at_indices);

struct DeimOperators {
  DeimOperator alpha, beta, gamma;
  bool naive_beta = false;  // apply DEIM to f^beta directly instead of via J^T
};

/// Train the three operators on nonlinearity evaluations at the ROM
/// projections of the given state snapshots.
DeimOperators train_deim_operators(const FemModel& fm, const PhysicsConfig& cfg,
                                   const ReductionBasis& basis, const SnapshotSet& snaps,
                                   int n_c, bool naive_beta = false);

/// Galerkin projection without compatibility guarantees (block-POD pair).
/// Simulations may legitimately break down.
std::unique_ptr<ReducedSystem> project_rom_baseline(const FemModel& fm,
                                                    const PhysicsConfig& cfg,
                                                    const BoundarySchedule& bc,
                                                    const ReductionBasis& pair);

/// Reduced system whose nonlinear terms are DEIM-approximated; the f^beta
/// path goes through the cellwise mean integrand and the J^T structure
/// unless naive_beta was selected during training.
std::unique_ptr<ReducedSystem> project_deim(const FemModel& fm, const PhysicsConfig& cfg,
                                            const BoundarySchedule& bc,
                                            const ReductionBasis& basis,
                                            const DeimOperators& ops);

/// "<prefix>.json" header plus one mode-matrix CSV per nonlinearity.
void save_deim_operators(const DeimOperators& ops, const std::string& prefix);
DeimOperators load_deim_operators(const std::string& prefix);

}  // namespace flownet
