#include "flownet/physics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace flownet {

namespace {

void check_domain(const PhysicsConfig& cfg, double rho) {
  if (!(rho > 0.0) || !cfg.admissible(rho))
    throw DomainError("density " + std::to_string(rho) + " outside admissible range");
}

}  // namespace

double PhysicsConfig::rho_max() const {
  if (RT * alpha > 0.0) return 1.0 / (RT * alpha);
  return std::numeric_limits<double>::infinity();
}

bool PhysicsConfig::admissible(double rho) const { return rho > 0.0 && rho < rho_max(); }

double pressure(const PhysicsConfig& cfg, double rho) {
  check_domain(cfg, rho);
  const double c = cfg.RT * cfg.alpha;
  return cfg.RT * rho / (1.0 - c * rho);
}

double pressure_potential(const PhysicsConfig& cfg, double rho) {
  check_domain(cfg, rho);
  const double c = cfg.RT * cfg.alpha;
  return cfg.RT * rho * std::log(rho / ((1.0 - c * rho) * cfg.rho_ref));
}

double dP(const PhysicsConfig& cfg, double rho) {
  check_domain(cfg, rho);
  const double c = cfg.RT * cfg.alpha;
  const double y = 1.0 - c * rho;
  return cfg.RT * (std::log(rho / (y * cfg.rho_ref)) + 1.0 + c * rho / y);
}

double d2P(const PhysicsConfig& cfg, double rho) {
  check_domain(cfg, rho);
  const double c = cfg.RT * cfg.alpha;
  const double y = 1.0 - c * rho;
  return cfg.RT * (1.0 / rho + c / y + c / (y * y));
}

double friction_r(const PhysicsConfig& cfg, EdgeId e, double diameter, double rho,
                  double m) {
  if (cfg.friction == FrictionModel::Laminar)
    return cfg.laminar_coefficient / (rho * rho);
  return cfg.lambda_for(e) / (2.0 * diameter) * std::abs(m) / (rho * rho);
}

double density_from_potential(const PhysicsConfig& cfg, double u) {
  const double hi = std::min(cfg.rho_max() * (1.0 - 1e-9), 1e9);
  double rho = std::min(std::max(cfg.rho_ref, 1e-12), hi);
  double best_rho = rho;
  double best_f = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double f = dP(cfg, rho) - u;
    if (std::abs(f) < best_f) {
      best_f = std::abs(f);
      best_rho = rho;
    }
    if (std::abs(f) <= 1e-15 * (1.0 + std::abs(u))) return rho;
    double next = rho - f / d2P(cfg, rho);
    if (!(next > 0.0)) next = rho / 2.0;
    if (next >= hi) next = 0.5 * (rho + hi);
    rho = next;
  }
  if (best_f <= 1e-9 * (1.0 + std::abs(u))) return best_rho;
  throw DomainError("potential inversion did not converge for u = " + std::to_string(u));
}

FrictionDerivs friction_rm(const PhysicsConfig& cfg, EdgeId e, double diameter,
                           double rho, double m) {
  FrictionDerivs d;
  if (cfg.friction == FrictionModel::Laminar) {
    const double c = cfg.laminar_coefficient;
    d.rm = c * m / (rho * rho);
    d.d_rm_dm = c / (rho * rho);
    d.d_rm_drho = -2.0 * c * m / (rho * rho * rho);
  } else {
    const double k = cfg.lambda_for(e) / (2.0 * diameter);
    d.rm = k * std::abs(m) * m / (rho * rho);
    d.d_rm_dm = 2.0 * k * std::abs(m) / (rho * rho);
    d.d_rm_drho = -2.0 * k * std::abs(m) * m / (rho * rho * rho);
  }
  return d;
}

}  // namespace flownet
