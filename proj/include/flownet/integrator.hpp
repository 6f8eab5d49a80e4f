#pragma once

#include "flownet/system.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace flownet {

struct NewtonOptions {
  double tol = 1e-10;  // on the residual scaled by (1 + initial residual norm)
  int max_iter = 25;
};

/// Divergence of the Newton iteration inside a time step.
struct SimulationBreakdown : std::runtime_error {
  double time;
  double residual;
  SimulationBreakdown(double t, double r)
      : std::runtime_error("simulation breakdown at t = " + std::to_string(t)),
        time(t),
        residual(r) {}
};

struct SteadySolveError : std::runtime_error {
  double residual;
  explicit SteadySolveError(double r)
      : std::runtime_error("steady solve failed, residual " + std::to_string(r)),
        residual(r) {}
};

/// Stationary solution for the boundary data at time t. Falls back to a
/// short homotopy in the boundary data when the direct solve diverges.
StateVec solve_steady(const System& sys, double t, const NewtonOptions& opts = {});

/// One implicit Euler step from (t, prev) to t + dt. Throws
/// SimulationBreakdown on Newton divergence.
struct StepStats {
  int newton_iters = 0;
  double residual = 0.0;
};
StateVec step(const System& sys, const StateVec& prev, double t, double dt,
              const NewtonOptions& opts = {}, StepStats* stats = nullptr);

struct MonitorSeries {
  std::vector<double> hamiltonian;
  std::vector<double> boundary_power;
  std::vector<double> dissipation;
  std::vector<double> mass_residual;  // 0 at the initial state
  std::vector<double> min_density;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVec> states;
  MonitorSeries monitors;
  bool breakdown = false;
  double breakdown_time = std::numeric_limits<double>::quiet_NaN();

  int num_states() const { return static_cast<int>(states.size()); }
};

/// Run the scenario on the given system. The initial state may be passed
/// explicitly (already in system coordinates, e.g. the restriction of a
/// full-order steady state); otherwise it comes from the scenario
/// definition. A breakdown stops the run and is recorded on the result.
Trajectory simulate(const System& sys, const Scenario& sc,
                    std::optional<StateVec> initial = std::nullopt,
                    const NewtonOptions& opts = {});

/// Discrete energy-balance residuals
///   r_k = [H(a^{k+1}) - H(a^k)]/dt - u . T m^{k+1} + <r m^2, 1>_*
/// computed from the recorded monitor series; length num_states()-1.
VecX energy_balance_residual(const Trajectory& traj);

/// Density positivity over the active cells, plus the exponential
/// lower-bound envelope (constant treated as 1) as a diagnostic series.
struct PositivityReport {
  double min_density = 0.0;
  bool positive = false;
  VecX min_density_series;
  VecX envelope;  // diagnostic, not an assertion
};
PositivityReport positivity_monitor(const System& sys, const Trajectory& traj);

}  // namespace flownet
