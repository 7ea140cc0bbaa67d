#pragma once

#include <string_view>
#include <vector>

#include "fhzd/poincare.hpp"

namespace fhzd {

enum class Multiplicity { Single, Multiple, NoneFound };

std::string_view to_string(Multiplicity m);

struct ReversalOptions {
  int scan_points = 200;      // first-iteration sign scan of Z over the bracket
  double root_tol = 1e-13;    // rad
  double step_tol = 1e-10;    // successive approximations, rad
  int max_iterations = 50;
  ImpactOptions impact{};
};

struct ReversalResult {
  double beta_r_minus = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |Z(beta_r_minus)| on the returned gait
  double bracket_lo = 0.0, bracket_hi = 0.0;
  Multiplicity multiplicity = Multiplicity::NoneFound;
  bool converged = false;
  std::vector<double> history;  // beta_r_minus after each iteration
};

void to_json(nlohmann::json& j, const ReversalResult& r);

/// Marginal condition of the reversal for the gait with its rising phase
/// ending at `beta` (the Bezier matrices are used as given):
///   Z = delta_r^2 delta_z^2 offset_f + offset_r.
/// Throws Undefined when the phase solutions cannot be built.
double z_function(const GaitParams& gait, double beta, const RobotParams& params, const ImpactOptions& impact = {});

/// Angle in (beta_r_plus, 0) where the CoM of the end-of-rising posture is
/// above the desired end-of-rising FRI. Throws AssumptionViolated when the
/// CoM does not start on the swing side of that FRI.
double beta_max(const GaitParams& gait, const RobotParams& params);

struct ReversalSolution {
  ReversalResult result;
  GaitParams gait;  // corrected for result.beta_r_minus
};

/// Successive approximations: correct the gait for the current reversal
/// guess, locate the root of Z in (beta_r_plus, beta_max), repeat.
/// Throws NoRoot or NotConverged.
ReversalSolution find_reversal(const GaitParams& gait_raw, double beta_guess, const RobotParams& params,
                               const ReversalOptions& opts = {});

}  // namespace fhzd
