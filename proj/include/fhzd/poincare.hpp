#pragma once

#include <optional>
#include <string>

#include "fhzd/zero_dynamics.hpp"

namespace fhzd {

/// Affine step-to-step maps on ankle zeta = sigma^2 / 2:
///   rho_r(z) = delta_r^2 delta_z^2 z + offset_r   (impact, then rising)
///   rho_f(z) = delta_f^2 z + offset_f             (falling)
/// for a gait whose rising phase ends at gait.beta_r_minus.
class ReturnMap {
 public:
  ReturnMap(const GaitParams& gait, const RobotParams& params, const ImpactOptions& impact = {});

  double rho_r(double zeta_f_minus) const { return delta_r2 * delta_z2 * zeta_f_minus + offset_r; }
  double rho_f(double zeta_r_minus) const { return delta_f2 * zeta_r_minus + offset_f; }
  double rho(double zeta_f_minus) const { return rho_f(rho_r(zeta_f_minus)); }
  double slope() const { return delta_f2 * delta_r2 * delta_z2; }

  /// Domain-checked evaluation: throws OutOfDomain when zeta turns negative
  /// inside a phase or the rising phase ends with negative zeta.
  double phase_map(Phase phase, double zeta_in) const;
  double return_map(double zeta_f_minus) const;

  const PhaseSolution& rising() const { return rising_; }
  const PhaseSolution& falling() const { return falling_; }

  double delta_r2 = 0.0, delta_f2 = 0.0, delta_z2 = 0.0, delta_z = 0.0;
  double offset_r = 0.0, offset_f = 0.0;
  // ankle -> FRI factors at the phase ends
  double transfer_r_plus = 0.0, transfer_r_minus = 0.0, transfer_f_plus = 0.0, transfer_f_minus = 0.0;

 private:
  PhaseSolution rising_, falling_;
  double tol_ = 0.0;
};

struct PoincareAnalysis {
  double delta_r2 = 0.0, delta_f2 = 0.0, delta_z2 = 0.0;
  double offset_r = 0.0;  // -delta_fri^a(beta_r-)^2 V_zr(beta_r-)
  double offset_f = 0.0;  // -delta_fri^a(beta_f-)^2 V_zf(beta_f-)
  double slope = 0.0;     // delta_f^2 delta_r^2 delta_z^2
  double zeta_fixed = 0.0;
  double zeta_r_minus = 0.0;  // rho_r(zeta_fixed), zero at a consistent reversal
  double beta_r_plus = 0.0, beta_r_minus = 0.0, beta_f_minus = 0.0;
  bool stable = false;
  bool in_domain = false;
  std::string domain_note;
};

void to_json(nlohmann::json& j, const PoincareAnalysis& a);

/// zeta_f* = (delta_f^2 offset_r + offset_f) / (1 - slope). Throws
/// MarginalContraction when the slope is within 1e-12 of one.
double closed_form_fixed_point(double slope, double delta_f2, double offset_r, double offset_f);

/// Closed-form fixed point and verdicts. Throws MarginalContraction when the
/// slope is within 1e-12 of one.
PoincareAnalysis fixed_point(const GaitParams& gait, const RobotParams& params, const ImpactOptions& impact = {});

}  // namespace fhzd
