#pragma once

#include <vector>

#include "fhzd/controller.hpp"

namespace fhzd {

enum class Pivot { Ankle, FRI };

/// Reduced coordinates; zeta = sigma^2 / 2 about the given pivot.
struct ZetaState {
  double beta = 0.0;
  double zeta = 0.0;
  Pivot pivot = Pivot::FRI;
};

/// Restricted dynamics coefficients at one beta:
///   dbeta/dt = k1 sigma_fri,  dsigma_fri/dt = k2 + k3 sigma_fri^2.
struct Kappas {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double inertia = 0.0;   // sigma / dbeta (about the ankle)
  double inertia_fri = 0.0;  // sigma_fri / dbeta
  double x_cm = 0.0;      // m
  double fri = 0.0;       // desired FRI, m
};

/// Restricted coefficients. With `check_decoupling` the decoupling matrix of
/// the on-manifold state is tested as well (DecouplingSingular).
Kappas kappas(double beta, Phase phase, const GaitParams& gait, const RobotParams& params,
              bool check_decoupling = true);

/// Closed-form solution of the linear zeta equation over one phase:
///   zeta_fri(beta) = delta(beta)^2 zeta_fri(beta_plus) - V(beta),
/// tabulated as Chebyshev series in beta over [beta_plus, beta_minus].
class PhaseSolution {
 public:
  PhaseSolution(Phase phase, const GaitParams& gait, const RobotParams& params, double tol = 1e-10);

  Phase phase() const { return phase_; }
  double beta_plus() const { return b0_; }
  double beta_minus() const { return b1_; }

  double delta(double beta) const;
  double potential(double beta) const;  // V_Z
  double zeta(double beta, double zeta_plus) const { return std::pow(delta(beta), 2) * zeta_plus - potential(beta); }

  /// Smallest zeta over the phase for the given start value and where it occurs.
  std::pair<double, double> min_zeta(double zeta_plus, int samples = 64) const;

  double error_estimate() const { return error_; }
  int nodes() const { return static_cast<int>(log_delta_.size()); }

 private:
  double to_t(double beta) const;

  Phase phase_;
  double b0_, b1_;
  std::vector<double> log_delta_;  // Chebyshev coefficients of ln delta
  std::vector<double> w_;          // of int exp(-2 ln delta) k2/k1
  double error_ = 0.0;
};

/// sigma_fri = delta_a_fri * sigma on the constraint surface.
double ankle_fri_transfer(double beta, Phase phase, const GaitParams& gait, const RobotParams& params);

/// sigma_r_plus / sigma_f_minus across the impact from the falling endpoint.
double impact_momentum_ratio(const GaitParams& gait, const RobotParams& params, const ImpactOptions& opts = {});

}  // namespace fhzd
