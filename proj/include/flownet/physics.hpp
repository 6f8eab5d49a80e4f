#pragma once

#include "flownet/network.hpp"

#include <map>
#include <vector>

namespace flownet {

enum class FrictionModel { Turbulent, Laminar };

/// Gas model constants and the friction closure.
///
/// Pressure law: p(rho) = RT rho / (1 - RT alpha rho), with the pressure
/// potential P chosen so that p = rho P'(rho) - P(rho) and P'' > 0 on the
/// admissible range.
///
/// Friction: turbulent r(rho,m) = lambda/(2D) |m|/rho^2 with a per-edge
/// factor lambda, or laminar r(rho,m) = c/rho^2.
struct PhysicsConfig {
  double RT = 146594.0;    // R*T [J/kg]
  double alpha = -3e-8;    // [1/Pa]
  double rho_ref = 1.0;    // rho_star [kg/m^3]
  double flow_ref = 1.0;   // (Am)_star [kg/s]

  FrictionModel friction = FrictionModel::Turbulent;
  double lambda_default = 0.01;         // turbulent friction factor
  std::map<EdgeId, double> lambda_per_edge;  // optional overrides
  double laminar_coefficient = 1.0;     // c in r = c/rho^2

  double lambda_for(EdgeId e) const {
    auto it = lambda_per_edge.find(e);
    return it == lambda_per_edge.end() ? lambda_default : it->second;
  }

  /// Upper admissible density (infinity if alpha <= 0).
  double rho_max() const;
  bool admissible(double rho) const;
};

/// p(rho) = RT rho / (1 - RT alpha rho)  [Pa]
double pressure(const PhysicsConfig& cfg, double rho);

/// Pressure potential P(rho) = RT rho log( rho / ((1 - RT alpha rho) rho_ref) ).
/// Satisfies p = rho P' - P and P'' > 0 on the admissible range.
double pressure_potential(const PhysicsConfig& cfg, double rho);

/// P'(rho)
double dP(const PhysicsConfig& cfg, double rho);

/// P''(rho)
double d2P(const PhysicsConfig& cfg, double rho);

/// Friction coefficient r(rho, m) on a given edge.
double friction_r(const PhysicsConfig& cfg, EdgeId e, double diameter, double rho,
                  double m);

/// Partial derivatives of r(rho,m)*m needed by Newton assembly.
struct FrictionDerivs {
  double rm;        // r(rho,m) * m
  double d_rm_dm;   // d(r m)/dm
  double d_rm_drho; // d(r m)/drho
};
FrictionDerivs friction_rm(const PhysicsConfig& cfg, EdgeId e, double diameter,
                           double rho, double m);

/// Invert the potential derivative: the density with P'(rho) = u, found by
/// a safeguarded Newton iteration on the convex branch.
double density_from_potential(const PhysicsConfig& cfg, double u);

}  // namespace flownet
