#pragma once

#include "flownet/network.hpp"
#include "flownet/physics.hpp"
#include "flownet/profile.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flownet {

enum class BcType { Potential, MassFlow };

/// How a potential-type profile is to be read: as a density [kg/m^3]
/// mapped through P', or as the raw potential value [m^2/s^2].
enum class PotentialGiven { Density, Potential };

struct BoundaryCondition {
  NodeId node = -1;
  BcType type = BcType::Potential;
  PotentialGiven given = PotentialGiven::Density;
  Profile profile;
};

struct UniformInitial {
  double rho = 1.0;  // [kg/m^3]
  double m = 0.0;    // [kg/(m^2 s)]
};

/// Simulation definition: horizon, step, physics, boundary data, initial state.
struct Scenario {
  double T = 0.0;   // [s]
  double dt = 0.0;  // [s]
  PhysicsConfig physics;
  std::vector<BoundaryCondition> boundary;
  std::optional<UniformInitial> uniform_initial;  // empty = steady state at t=0

  int num_steps() const { return static_cast<int>(std::llround(T / dt)); }

  /// Checks dt/T positivity and that boundary conditions match the
  /// network's boundary nodes one-to-one.
  void validate(const Network& net) const;
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& sc);

/// Boundary data resolved against a network: which boundary slots carry
/// potential data and which carry mass-flow constraints, plus evaluators.
class BoundarySchedule {
 public:
  BoundarySchedule(const Scenario& sc, const Network& net);

  const std::vector<int>& potential_slots() const { return pot_slots_; }
  const std::vector<int>& flow_slots() const { return flow_slots_; }
  int num_flow() const { return static_cast<int>(flow_slots_.size()); }

  /// Potential inputs u_i(t), aligned with potential_slots().
  VecX potentials(double t) const;
  /// Mass-flow targets for [T m]_i, aligned with flow_slots().
  VecX flows(double t) const;

 private:
  const PhysicsConfig* cfg_;
  std::vector<int> pot_slots_, flow_slots_;
  std::vector<Profile> pot_profiles_;
  std::vector<PotentialGiven> pot_given_;
  std::vector<Profile> flow_profiles_;
};

}  // namespace flownet
