#include "fhzd/reference.hpp"

#include <numbers>

namespace fhzd {

namespace {

constexpr double kPi = std::numbers::pi;

BezierRows relative(const Eigen::Matrix<double, 3, 6>& th, double b0, double b1) {
  BezierRows r(3, 6);
  for (int i = 0; i < 6; ++i) {
    const double th1 = kPi + b0 + (b1 - b0) * i / 5.0;
    r(0, i) = th(0, i) - th1;
    r(1, i) = th(1, i) - th(0, i);
    r(2, i) = th(2, i) - th(1, i);
  }
  return r;
}

}  // namespace

ReferenceShape walking_shape() {
  ReferenceShape sh;
  sh.tilt = 0.15;
  sh.fri_start = 0.0;
  sh.fri_reversal = -0.02;
  sh.fri_end = -0.036;
  return sh;
}

GaitParams reference_gait(const RobotParams& p, const ReferenceShape& sh) {
  const double a = sh.lean, t = sh.tilt;
  GaitParams g;
  g.beta_f_minus = -kPi / 2 - a;
  g.beta_r_minus = -kPi / 2 + sh.reversal;
  g.beta_r_plus = -kPi / 2 - a;
  Eigen::Matrix<double, 3, 6> tr, tf;
  tr << 0, t, t, t, t, t,
      -kPi / 2 + a, -kPi / 2 + a, -kPi / 2, -kPi / 2 - 0.02, -kPi / 2 - 0.02, -kPi / 2 - 0.02,
      -kPi, -kPi, -kPi, -kPi, -kPi, -kPi;
  tf << t, t, t, t, 0.5 * t, 0,
      -kPi / 2 - 0.02, -kPi / 2 - 0.02, -kPi / 2, -kPi / 2 + a, -kPi / 2 + a, -kPi / 2 + a,
      -kPi, -kPi, -kPi, -kPi, -kPi, -kPi;
  g.b_r = relative(tr, g.beta_r_plus, g.beta_r_minus);
  g.b_f = relative(tf, g.beta_r_minus, g.beta_f_minus);
  g.bfri_r.resize(1, 4);
  g.bfri_f.resize(1, 4);
  // flat at both ends of each phase
  g.bfri_r << sh.fri_start, sh.fri_start, sh.fri_reversal, sh.fri_reversal;
  g.bfri_f << sh.fri_reversal, sh.fri_reversal, sh.fri_end, sh.fri_end;
  set_landing_pose(g, g.beta_f_minus, -(kPi + g.beta_f_minus), p);
  return g;
}

GaitParams example_gait(const RobotParams& params) {
  const GaitParams raw = reference_gait(params, walking_shape());
  return find_reversal(raw, raw.beta_r_minus, params).gait;
}

GaitParams example_seed_gait(const RobotParams& params) {
  GaitParams g = reference_gait(params, walking_shape());
  g.b_f(1, g.degree() - 1) += 0.2;
  return g;
}

GaitProblem example_problem(const RobotParams& params) {
  GaitProblem p;
  p.seed = example_seed_gait(params);
  p.constraints.step_time = 0.7;
  p.complete_bounds();
  return p;
}

}  // namespace fhzd
