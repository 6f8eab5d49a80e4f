#pragma once

#include "flownet/fem_model.hpp"
#include "flownet/forms.hpp"
#include "flownet/nonlinear.hpp"
#include "flownet/scenario.hpp"

#include <Eigen/SparseLU>

#include <memory>

namespace flownet {

/// Coordinate state at one time level: density and flux coefficients plus
/// one Lagrange multiplier per mass-flow boundary condition.
struct StateVec {
  VecX a1, a2, lambda;
};

/// Common interface of the FOM and the reduced models: the Galerkin
/// structure of the flow problem at any approximation level.
///
/// The first equation block Qs da1/dt = -Js a2 is linear and enforced
/// exactly by every Newton solve; the momentum block differences the
/// nonlinear mass term f^alpha in time, so steady states are exact fixed
/// points of the implicit Euler step.
///
/// Implementations are immutable after construction and safe for
/// concurrent read-only use.
class System {
 public:
  System(const FemModel& fm, const PhysicsConfig& cfg, const BoundarySchedule& bc,
         BilinearForm form)
      : fm_(&fm), cfg_(&cfg), bc_(&bc), form_(std::move(form)) {}
  virtual ~System() = default;

  virtual int n1() const = 0;
  virtual int n2() const = 0;
  int num_multipliers() const { return bc_->num_flow(); }
  int size() const { return n1() + n2() + num_multipliers(); }

  VecX pack(const StateVec& s) const;
  StateVec unpack(const VecX& x) const;

  /// Coordinate vector f^alpha at the packed state x (the nonlinear mass
  /// term that the implicit Euler step differences in time).
  virtual VecX alpha_term(const VecX& x) const = 0;

  /// Residual of the implicit Euler step (xprev != nullptr) or of the
  /// steady equations (xprev == nullptr) at time t. `homotopy` in (0,1]
  /// blends boundary data towards a trivial equilibrium for continuation.
  /// `falpha_prev` may carry the precomputed alpha_term of xprev.
  virtual VecX residual(const VecX& x, const VecX* xprev, double t, double dt,
                        double homotopy, const VecX* falpha_prev = nullptr) const = 0;

  /// Newton direction dx solving J_F(x) dx = -F.
  virtual VecX newton_direction(const VecX& x, const VecX* xprev, double t, double dt,
                                double homotopy, const VecX& F) const = 0;

  virtual VecX lift_a1(const VecX& a1) const = 0;
  virtual VecX lift_a2(const VecX& a2) const = 0;

  /// State in system coordinates closest (in the Q/W inner products) to
  /// given full-order coefficients.
  virtual StateVec restrict_full(const VecX& a1_full, const VecX& a2_full,
                                 const VecX& lambda) const = 0;

  /// || Qs (a1 - a1_prev)/dt + Js a2 || for the recorded states.
  virtual double mass_residual(const StateVec& prev, const StateVec& cur,
                               double dt) const = 0;

  double hamiltonian(const StateVec& s) const;
  double dissipation(const StateVec& s) const;
  double min_density(const StateVec& s) const;
  /// u(t) . T m with the multiplier standing in for the potential at
  /// mass-flow boundary nodes.
  double boundary_power(const StateVec& s, double t) const;

  const FemModel& fem() const { return *fm_; }
  const PhysicsConfig& physics() const { return *cfg_; }
  const BoundarySchedule& boundary() const { return *bc_; }
  const BilinearForm& form() const { return form_; }

 protected:
  /// Potential inputs blended towards their mean by the homotopy factor.
  VecX blended_potentials(double t, double homotopy) const;
  VecX blended_flows(double t, double homotopy) const;

  const FemModel* fm_;
  const PhysicsConfig* cfg_;
  const BoundarySchedule* bc_;
  BilinearForm form_;
};

/// Full-order model: sparse assembly over all cells.
class FomSystem : public System {
 public:
  FomSystem(const FemModel& fm, const PhysicsConfig& cfg, const BoundarySchedule& bc);

  int n1() const override { return fm_->N1; }
  int n2() const override { return fm_->N2; }

  VecX alpha_term(const VecX& x) const override;
  VecX residual(const VecX& x, const VecX* xprev, double t, double dt, double homotopy,
                const VecX* falpha_prev = nullptr) const override;
  VecX newton_direction(const VecX& x, const VecX* xprev, double t, double dt,
                        double homotopy, const VecX& F) const override;
  VecX lift_a1(const VecX& a1) const override { return a1; }
  VecX lift_a2(const VecX& a2) const override { return a2; }
  StateVec restrict_full(const VecX& a1_full, const VecX& a2_full,
                         const VecX& lambda) const override;
  double mass_residual(const StateVec& prev, const StateVec& cur,
                       double dt) const override;

 private:
  SpMat B_pot_, B_flow_;
};

/// Galerkin-reduced model over block bases (V1, V2); the bilinear form is
/// either the full L^2 product (ROM) or a trained quadrature rule (CROM).
/// Lagrange multipliers are kept unreduced.
class ReducedSystem : public System {
 public:
  ReducedSystem(const FemModel& fm, const PhysicsConfig& cfg, const BoundarySchedule& bc,
                MatX V1, MatX V2, BilinearForm form);

  int n1() const override { return static_cast<int>(V1_.cols()); }
  int n2() const override { return static_cast<int>(V2_.cols()); }

  VecX alpha_term(const VecX& x) const override;
  VecX residual(const VecX& x, const VecX* xprev, double t, double dt, double homotopy,
                const VecX* falpha_prev = nullptr) const override;
  VecX newton_direction(const VecX& x, const VecX* xprev, double t, double dt,
                        double homotopy, const VecX& F) const override;
  VecX lift_a1(const VecX& a1) const override { return V1_ * a1; }
  VecX lift_a2(const VecX& a2) const override { return V2_ * a2; }
  StateVec restrict_full(const VecX& a1_full, const VecX& a2_full,
                         const VecX& lambda) const override;
  double mass_residual(const StateVec& prev, const StateVec& cur,
                       double dt) const override;

  const MatX& V1() const { return V1_; }
  const MatX& V2() const { return V2_; }
  const MatX& Qr() const { return Qr_; }
  const MatX& Jr() const { return Jr_; }

 protected:
  /// Reduced nonlinear vectors and, on request, their dense Jacobians.
  struct ReducedNonlinears {
    VecX fa, fb, fg;
    MatX dfa_d1, dfa_d2, dfb_d1, dfb_d2, dfg_d1, dfg_d2;
  };
  virtual ReducedNonlinears eval_nonlinears(const VecX& a1r, const VecX& a2r,
                                            bool want_jacobians) const;

  MatX V1_, V2_;
  MatX P2nodal_;  // E_map * V2: nodal values of the reduced flux basis
  MatX Qr_, Jr_, Wr_;
  MatX Br_pot_, Br_flow_;
  Eigen::LLT<MatX> Qr_llt_, Wr_llt_;
};

}  // namespace flownet
