#pragma once

#include "flownet/integrator.hpp"

namespace flownet {

/// Trajectory expressed in full-order coordinates.
struct LiftedTrajectory {
  std::vector<double> times;
  std::vector<VecX> a1, a2;

  int num_states() const { return static_cast<int>(a1.size()); }
};

LiftedTrajectory lift_trajectory(const System& sys, const Trajectory& traj);

/// L^2 norm of a state from the block-diagonal (Q, W) inner product.
double state_norm(const FemModel& fm, const VecX& a1, const VecX& a2);

/// Relative sup-in-time error
///   E_T = max_t ||a(t) - approx(t)|| / max_t ||a(t)||.
/// Both trajectories must live on the same time grid; if the approximate
/// run broke down early, the comparison covers the common prefix and the
/// missing states count with the full reference norm (error 1 tail).
double error_metric_ET(const FemModel& fm, const LiftedTrajectory& reference,
                       const LiftedTrajectory& approx);

/// Blockwise weighted orthogonal projection of every state onto
/// im(V1) x im(V2) (Q- and W-inner products).
LiftedTrajectory project_trajectory(const FemModel& fm, const MatX& V1, const MatX& V2,
                                    const LiftedTrajectory& traj);

}  // namespace flownet
