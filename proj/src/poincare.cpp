#include "fhzd/poincare.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fhzd {

namespace {

constexpr int kDomainSamples = 64;

// Smallest fri-zeta strictly inside the phase.
double interior_min(const PhaseSolution& s, double zeta_fri_plus) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 1; i < kDomainSamples; ++i) {
    const double b = s.beta_plus() + (s.beta_minus() - s.beta_plus()) * i / kDomainSamples;
    m = std::min(m, s.zeta(b, zeta_fri_plus));
  }
  return m;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

ReturnMap::ReturnMap(const GaitParams& gait, const RobotParams& params, const ImpactOptions& impact)
    : rising_(Phase::Rising, gait, params), falling_(Phase::Falling, gait, params) {
  delta_z = impact_momentum_ratio(gait, params, impact);
  delta_z2 = delta_z * delta_z;
  transfer_r_plus = ankle_fri_transfer(gait.beta_r_plus, Phase::Rising, gait, params);
  transfer_r_minus = ankle_fri_transfer(gait.beta_r_minus, Phase::Rising, gait, params);
  transfer_f_plus = ankle_fri_transfer(gait.beta_r_minus, Phase::Falling, gait, params);
  transfer_f_minus = ankle_fri_transfer(gait.beta_f_minus, Phase::Falling, gait, params);

  const double dr = rising_.delta(gait.beta_r_minus);
  const double df = falling_.delta(gait.beta_f_minus);
  delta_r2 = std::pow(dr * transfer_r_plus / transfer_r_minus, 2);
  delta_f2 = std::pow(df * transfer_f_plus / transfer_f_minus, 2);
  offset_r = -rising_.potential(gait.beta_r_minus) / std::pow(transfer_r_minus, 2);
  offset_f = -falling_.potential(gait.beta_f_minus) / std::pow(transfer_f_minus, 2);
  tol_ = 1e-9 * (1.0 + std::abs(offset_r) + std::abs(offset_f));
}

double ReturnMap::phase_map(Phase phase, double zeta_in) const {
  if (!(zeta_in >= -tol_)) throw Error(ErrorCode::OutOfDomain, "negative zeta entering the " + std::string(to_string(phase)) + " phase");
  if (phase == Phase::Rising) {
    const double z0 = std::pow(transfer_r_plus, 2) * delta_z2 * zeta_in;
    if (interior_min(rising_, z0) < -tol_)
      throw Error(ErrorCode::OutOfDomain, "rising phase halts before the reversal angle");
    const double out = rho_r(zeta_in);
    if (out < -tol_) throw Error(ErrorCode::OutOfDomain, "rising phase halts before the reversal angle");
    return out;
  }
  const double z0 = std::pow(transfer_f_plus, 2) * std::max(zeta_in, 0.0);
  if (interior_min(falling_, z0) < -tol_) throw Error(ErrorCode::OutOfDomain, "falling phase stalls before touchdown");
  return rho_f(zeta_in);
}

double ReturnMap::return_map(double zeta_f_minus) const {
  if (!(zeta_f_minus > 0.0)) throw Error(ErrorCode::OutOfDomain, "zeta_f- must be positive");
  return phase_map(Phase::Falling, phase_map(Phase::Rising, zeta_f_minus));
}

double closed_form_fixed_point(double slope, double delta_f2, double offset_r, double offset_f) {
  if (!(std::abs(1.0 - slope) >= 1e-12))
    throw Error(ErrorCode::MarginalContraction, "delta_f^2 delta_r^2 delta_z^2 = " + fmt(slope));
  return (delta_f2 * offset_r + offset_f) / (1.0 - slope);
}

PoincareAnalysis fixed_point(const GaitParams& gait, const RobotParams& params, const ImpactOptions& impact) {
  const ReturnMap map(gait, params, impact);
  PoincareAnalysis a;
  a.delta_r2 = map.delta_r2;
  a.delta_f2 = map.delta_f2;
  a.delta_z2 = map.delta_z2;
  a.offset_r = map.offset_r;
  a.offset_f = map.offset_f;
  a.slope = map.slope();
  a.beta_r_plus = gait.beta_r_plus;
  a.beta_r_minus = gait.beta_r_minus;
  a.beta_f_minus = gait.beta_f_minus;
  a.zeta_fixed = closed_form_fixed_point(a.slope, a.delta_f2, a.offset_r, a.offset_f);
  a.zeta_r_minus = map.rho_r(a.zeta_fixed);
  a.stable = a.slope > 0.0 && a.slope < 1.0;

  // Constructive membership test of the domain of the return map.
  const double tol = 1e-9 * (1.0 + std::abs(a.offset_r) + std::abs(a.offset_f));
  std::string note;
  if (!(a.zeta_fixed > 0.0)) {
    note = "fixed point zeta_f* = " + fmt(a.zeta_fixed) + " is not positive";
  } else {
    const double zr0 = std::pow(map.transfer_r_plus, 2) * a.delta_z2 * a.zeta_fixed;
    const double kappa2_end = kappas(gait.beta_r_minus, Phase::Rising, gait, params, false).k2;
    if (interior_min(map.rising(), zr0) < -tol)
      note = "rising phase halts before beta_r-";
    else if (std::abs(a.zeta_r_minus) > 1e-8 * std::max(1.0, a.zeta_fixed))
      note = "no reversal at beta_r- (zeta_r- = " + fmt(a.zeta_r_minus) + ")";
    else if (!(kappa2_end < 0.0))
      note = "momentum does not reverse at beta_r- (kappa2 >= 0)";
    else if (interior_min(map.falling(), 0.0) < -tol)
      note = "falling phase stalls before touchdown";
  }
  a.in_domain = note.empty();
  a.domain_note = a.in_domain ? "ok" : note;
  return a;
}

void to_json(nlohmann::json& j, const PoincareAnalysis& a) {
  j = nlohmann::json{{"delta_r2", a.delta_r2},
                     {"delta_f2", a.delta_f2},
                     {"delta_z2", a.delta_z2},
                     {"offset_r", a.offset_r},
                     {"offset_f", a.offset_f},
                     {"slope", a.slope},
                     {"zeta_fixed", a.zeta_fixed},
                     {"zeta_r_minus", a.zeta_r_minus},
                     {"beta_r_plus", a.beta_r_plus},
                     {"beta_r_minus", a.beta_r_minus},
                     {"beta_f_minus", a.beta_f_minus},
                     {"stable", a.stable},
                     {"in_domain", a.in_domain},
                     {"domain_note", a.domain_note}};
}

}  // namespace fhzd
