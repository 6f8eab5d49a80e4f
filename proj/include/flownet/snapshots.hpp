#pragma once

#include "flownet/error_metric.hpp"

namespace flownet {

/// Snapshot matrices in full-order coordinates, with time stamps and a
/// trajectory segmentation (columns of one trajectory share a segment id;
/// the quadrature training differences velocities within segments only).
struct SnapshotSet {
  MatX S1;  // N1 x L
  MatX S2;  // N2 x L
  std::vector<double> stamps;
  std::vector<int> segment;

  int count() const { return static_cast<int>(S1.cols()); }
};

/// Evenly spaced selection of `count` snapshots from a lifted trajectory
/// (first and last states included).
SnapshotSet collect_snapshots(const LiftedTrajectory& traj, int count, int segment_id = 0);

/// Concatenate snapshot sets (columns side by side, segments kept).
SnapshotSet merge_snapshots(const SnapshotSet& a, const SnapshotSet& b);

}  // namespace flownet
