#include "flownet/snapshots.hpp"

#include <cmath>

namespace flownet {

SnapshotSet collect_snapshots(const LiftedTrajectory& traj, int count, int segment_id) {
  const int n = traj.num_states();
  if (count < 1 || count > n)
    throw ValidationError("snapshot count must be in [1, states]");
  SnapshotSet s;
  s.S1.resize(traj.a1.front().size(), count);
  s.S2.resize(traj.a2.front().size(), count);
  for (int k = 0; k < count; ++k) {
    const int idx = count == 1 ? 0
                               : static_cast<int>(std::llround(
                                     static_cast<double>(k) * (n - 1) / (count - 1)));
    s.S1.col(k) = traj.a1[idx];
    s.S2.col(k) = traj.a2[idx];
    s.stamps.push_back(traj.times[idx]);
    s.segment.push_back(segment_id);
  }
  return s;
}

SnapshotSet merge_snapshots(const SnapshotSet& a, const SnapshotSet& b) {
  if (a.S1.rows() != b.S1.rows() || a.S2.rows() != b.S2.rows())
    throw ValidationError("snapshot sets have mismatched dimensions");
  SnapshotSet s;
  s.S1.resize(a.S1.rows(), a.count() + b.count());
  s.S2.resize(a.S2.rows(), a.count() + b.count());
  s.S1 << a.S1, b.S1;
  s.S2 << a.S2, b.S2;
  s.stamps = a.stamps;
  s.stamps.insert(s.stamps.end(), b.stamps.begin(), b.stamps.end());
  s.segment = a.segment;
  s.segment.insert(s.segment.end(), b.segment.begin(), b.segment.end());
  return s;
}

}  // namespace flownet
