#pragma once

#include "flownet/pod.hpp"

namespace flownet {

/// Integrand snapshots for the quadrature training problem. Row r holds
/// the per-cell integrals (no area weight) of one nonlinear integrand;
/// b[r] is the corresponding area-weighted full integral.
struct NonlinearSnapshotData {
  MatX A;  // Lbar x J
  VecX b;  // Lbar

  struct RowTag {
    char mapping;  // 'b' pressure term, 'g' friction term, 'v' velocity difference
    int snapshot;  // snapshot index (right one for differences)
    int basis;     // reduced flux basis function index
  };
  std::vector<RowTag> tags;

  int rows() const { return static_cast<int>(A.rows()); }
};

/// Rows for the three reduced nonlinear integrands over every state
/// snapshot, with velocity differences taken between consecutive
/// same-segment snapshots. A single-trajectory set with L snapshots and
/// n2 flux basis functions yields (3L - 1) n2 rows.
NonlinearSnapshotData build_nonlinear_snapshots(const FemModel& fm,
                                                const PhysicsConfig& cfg,
                                                const SnapshotSet& snaps,
                                                const ReductionBasis& basis);

/// Nonnegative least squares min ||A x - b||, Lawson-Hanson active set.
VecX nnls(const MatX& A, const VecX& b, double kkt_tol = 1e-10);

/// Reduced mass matrix blocks assembled over the active cells of a rule.
struct McMatrix {
  MatX Qc, Wc;
};
McMatrix mc_matrix(const ReductionBasis& basis, const FemModel& fm,
                   const QuadratureRule& rule);

struct SpectrumCheck {
  bool pass = false;
  double min_eig = 0.0;
  double max_eig = 0.0;
  double cond = std::numeric_limits<double>::infinity();
};
SpectrumCheck spectrum_check(const McMatrix& mc, double C_tilde);

/// Greedy training of the quadrature rule: grow the active set by the
/// steepest-descent column, re-solve the restricted NNLS, and extend n_c
/// if the spectrum safeguard fails at the end. Weights that come back
/// exactly zero are dropped from the final rule. `normalize_rows` rescales
/// every training row to unit norm first (experimentation aid, off by
/// default).
struct GreedyReport {
  std::vector<double> objective_history;  // F after each round
  int requested_nc = 0;
  int final_nc = 0;   // rounds actually run (after safeguard extensions)
  int active_size = 0;
};
QuadratureRule greedy_quadrature(const NonlinearSnapshotData& data, int n_c,
                                 double C_tilde, const FemModel& fm,
                                 const ReductionBasis& basis,
                                 GreedyReport* report = nullptr,
                                 bool normalize_rows = false);

/// Complexity-reduced model: the ROM projection with every nonlinear term
/// evaluated through the rule's bilinear form. Rules failing the spectrum
/// bound are rejected.
std::unique_ptr<ReducedSystem> project_crom(const FemModel& fm, const PhysicsConfig& cfg,
                                            const BoundarySchedule& bc,
                                            const ReductionBasis& basis,
                                            const QuadratureRule& rule);

}  // namespace flownet
