#include "fhzd/controller.hpp"

#include <cmath>
#include <limits>

namespace fhzd {

double condition_number(const Mat3& a) {
  const Vec3 s = Eigen::JacobiSVD<Mat3>(a).singularValues();
  if (!(s[2] > 0.0) || !s.allFinite()) return std::numeric_limits<double>::infinity();
  return s[0] / s[2];
}

namespace {

Mat3 decoupling(const Mat4& D, const Kinematics& kin, const DesiredOutputs& o, double m) {
  const auto lu = D.ldlt();
  Eigen::Matrix<double, 4, 3> B = Eigen::Matrix<double, 4, 3>::Zero();
  B.bottomRows<3>().setIdentity();
  const Vec4 Dinv_e1 = lu.solve(Vec4::UnitX());
  const Eigen::Matrix<double, 4, 3> Dinv_B = lu.solve(B);
  const Eigen::RowVector4d jy = kin.com.jac.row(1);
  const double denom = 1.0 - o.fri * m * jy.dot(Dinv_e1);
  if (std::abs(denom) < 1e-12) return Mat3::Constant(std::numeric_limits<double>::infinity());
  const Eigen::RowVector3d gamma = o.fri * m * jy * Dinv_B / denom;
  Eigen::Matrix<double, 3, 4> H;
  H << -o.dh, Mat3::Identity();
  return H * (Dinv_B + Dinv_e1 * gamma);
}

}  // namespace

Mat3 decoupling_matrix(const FullState& x, const GaitParams& gait, Phase phase, const RobotParams& params) {
  return decoupling(dynamics_terms(x.q, x.dq, params).D, kinematics(x.q, params), desired_outputs(gait, phase, x.q[0]),
                    params.total_mass());
}

ControlSolution control_law(const FullState& x, const GaitParams& gait, Phase phase, const RobotParams& params,
                            const ControlOptions& opts) {
  const DesiredOutputs o = desired_outputs(gait, phase, x.q[0]);
  const DynamicsTerms t = dynamics_terms(x.q, x.dq, params);
  const Kinematics kin = kinematics(x.q, params, x.dq);
  const double m = params.total_mass();
  const double kp = opts.bandwidth * opts.bandwidth;
  const double kd = 2.0 * opts.bandwidth;

  ControlSolution cs;
  cs.y = x.qb() - o.h;
  cs.dy = x.dq.tail<3>() - o.dh * x.dq[0];
  cs.fri_desired = o.fri;

  // Unknowns [ddq; ub; u1].
  Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
  Vec8 rhs;
  A.topLeftCorner<4, 4>() = t.D;
  A.block<3, 3>(1, 4) = -Mat3::Identity();
  A(0, 7) = -1.0;
  rhs.head<4>() = -t.C - t.G;
  A.block<3, 1>(4, 0) = -o.dh;
  A.block<3, 3>(4, 1) = Mat3::Identity();
  rhs.segment<3>(4) = -kp * cs.y - kd * cs.dy + o.ddh * x.dq[0] * x.dq[0];
  A.block<1, 4>(7, 0) = -o.fri * m * kin.com.jac.row(1);
  A(7, 7) = 1.0;
  rhs[7] = o.fri * m * (params.g0 + kin.com.bias.y());

  if (opts.check_decoupling) {
    cs.condition = condition_number(decoupling(t.D, kin, o, m));
    if (!(cs.condition <= opts.max_condition))
      throw Error(ErrorCode::DecouplingSingular, "decoupling matrix condition " + std::to_string(cs.condition));
  }
  const Vec8 sol = A.partialPivLu().solve(rhs);
  cs.ddq = sol.head<4>();
  cs.ub = sol.segment<3>(4);
  cs.u1 = sol[7];
  return cs;
}

}  // namespace fhzd
