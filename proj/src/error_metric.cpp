#include "flownet/error_metric.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace flownet {

LiftedTrajectory lift_trajectory(const System& sys, const Trajectory& traj) {
  LiftedTrajectory out;
  out.times = traj.times;
  out.a1.reserve(traj.states.size());
  out.a2.reserve(traj.states.size());
  for (const auto& s : traj.states) {
    out.a1.push_back(sys.lift_a1(s.a1));
    out.a2.push_back(sys.lift_a2(s.a2));
  }
  return out;
}

double state_norm(const FemModel& fm, const VecX& a1, const VecX& a2) {
  const double q = a1.dot(fm.Q_diag.cwiseProduct(a1));
  const double w = a2.dot(fm.W * a2);
  return std::sqrt(q + w);
}

double error_metric_ET(const FemModel& fm, const LiftedTrajectory& reference,
                       const LiftedTrajectory& approx) {
  if (approx.num_states() > reference.num_states())
    throw ValidationError("approximate trajectory longer than the reference");
  for (int k = 0; k < approx.num_states(); ++k)
    if (std::abs(reference.times[k] - approx.times[k]) >
        1e-9 * (1.0 + std::abs(reference.times[k])))
      throw ValidationError("trajectories live on different time grids");

  double max_err = 0.0, max_ref = 0.0;
  for (int k = 0; k < reference.num_states(); ++k) {
    max_ref = std::max(max_ref, state_norm(fm, reference.a1[k], reference.a2[k]));
    const double err =
        k < approx.num_states()
            ? state_norm(fm, reference.a1[k] - approx.a1[k], reference.a2[k] - approx.a2[k])
            : state_norm(fm, reference.a1[k], reference.a2[k]);
    max_err = std::max(max_err, err);
  }
  if (max_ref == 0.0) return max_err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return max_err / max_ref;
}

LiftedTrajectory project_trajectory(const FemModel& fm, const MatX& V1, const MatX& V2,
                                    const LiftedTrajectory& traj) {
  const MatX G1 = V1.transpose() * fm.Q_diag.asDiagonal() * V1;
  const MatX G2 = V2.transpose() * (fm.W * V2);
  Eigen::LLT<MatX> llt1(G1), llt2(G2);
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success)
    throw ValidationError("projection basis Gram matrix not positive definite");

  LiftedTrajectory out;
  out.times = traj.times;
  out.a1.reserve(traj.a1.size());
  out.a2.reserve(traj.a2.size());
  for (int k = 0; k < traj.num_states(); ++k) {
    out.a1.push_back(V1 * llt1.solve(V1.transpose() * fm.Q_diag.cwiseProduct(traj.a1[k])));
    out.a2.push_back(V2 * llt2.solve(V2.transpose() * (fm.W * traj.a2[k])));
  }
  return out;
}

}  // namespace flownet
