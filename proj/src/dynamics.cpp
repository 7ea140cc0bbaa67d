#include "fhzd/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace fhzd {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 dir(double th) { return {std::cos(th), std::sin(th)}; }
Vec2 dir_perp(double th) { return {-std::sin(th), std::cos(th)}; }
Vec2 normal(double th) { return {std::sin(th), -std::cos(th)}; }

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Offset of the CoM of link `i` from its proximal joint along (e, n).
Vec2 proximal_offset(int i, const RobotParams& params) {
  const auto& l = params.links[i];
  if (i == 2) return {l.length - l.com.x(), l.com.y()};
  return l.com;
}

// Point on link `link` at proximal offset (along, across). Derivatives w.r.t.
// the absolute angles are diagonal in the second order, so the velocity
// product term is sum_j d2p/dth_j^2 * dth_j^2.
PointKinematics point_on_link(int link, double along, double across, const Vec4& th, const Vec4& dth,
                              const RobotParams& params) {
  PointKinematics pk;
  Eigen::Matrix<double, 2, 4> jth = Eigen::Matrix<double, 2, 4>::Zero();
  for (int j = 0; j < link; ++j) {
    const double L = params.links[j].length;
    pk.p += L * dir(th[j]);
    jth.col(j) = L * dir_perp(th[j]);
    pk.bias += -L * dir(th[j]) * dth[j] * dth[j];
  }
  pk.p += along * dir(th[link]) + across * normal(th[link]);
  jth.col(link) = along * dir_perp(th[link]) + across * dir(th[link]);
  pk.bias += (-along * dir(th[link]) - across * normal(th[link])) * dth[link] * dth[link];
  // dth/dq is lower triangular ones: column k of J_q sums columns j >= k.
  for (int k = 0; k < 4; ++k) {
    Vec2 c = Vec2::Zero();
    for (int j = k; j < 4; ++j) c += jth.col(j);
    pk.jac.col(k) = c;
  }
  return pk;
}

Vec4 angle_rates(const Vec4& dq) {
  Vec4 w;
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += dq[i];
    w[i] = acc;
  }
  return w;
}

Eigen::RowVector4d angle_row(int i) {
  Eigen::RowVector4d r = Eigen::RowVector4d::Zero();
  r.head(i + 1).setOnes();
  return r;
}

}  // namespace

Vec4 link_angles(const Vec4& q) {
  Vec4 th;
  double acc = kPi;
  for (int i = 0; i < 4; ++i) {
    acc += q[i];
    th[i] = acc;
  }
  return th;
}

Kinematics kinematics(const Vec4& q, const RobotParams& params, const Vec4& dq) {
  const Vec4 th = link_angles(q);
  const Vec4 dth = angle_rates(dq);
  Kinematics k;
  k.joints[0] = Vec2::Zero();
  for (int i = 1; i < 4; ++i) k.joints[i] = k.joints[i - 1] + params.links[i - 1].length * dir(th[i - 1]);

  const double m = params.total_mass();
  for (int i = 0; i < 4; ++i) {
    const Vec2 off = proximal_offset(i, params);
    k.link_com[i] = point_on_link(i, off.x(), off.y(), th, dth, params);
    const double w = params.links[i].mass / m;
    k.com.p += w * k.link_com[i].p;
    k.com.jac += w * k.link_com[i].jac;
    k.com.bias += w * k.link_com[i].bias;
  }
  k.heel = point_on_link(3, params.x_heel, 0.0, th, dth, params);
  k.toe = point_on_link(3, params.x_toe, 0.0, th, dth, params);
  return k;
}

std::array<Mat4, 4> mass_matrix_derivatives(const Vec4& q, const RobotParams& params) {
  const Vec4 th = link_angles(q);
  std::array<Mat4, 4> dD;
  for (auto& m : dD) m.setZero();

  for (int i = 0; i < 4; ++i) {
    const Vec2 off = proximal_offset(i, params);
    const auto pk = point_on_link(i, off.x(), off.y(), th, Vec4::Zero(), params);
    // Second derivative of the CoM w.r.t. absolute angle l (only l <= i).
    std::array<Vec2, 4> h;
    for (int l = 0; l < 4; ++l) h[l].setZero();
    for (int l = 0; l < i; ++l) h[l] = -params.links[l].length * dir(th[l]);
    h[i] = -off.x() * dir(th[i]) - off.y() * normal(th[i]);

    for (int k = 0; k < 4; ++k) {
      Mat24 dj = Mat24::Zero();
      for (int l = k; l <= i; ++l) dj += h[l] * angle_row(l);
      dD[k] += params.links[i].mass * (dj.transpose() * pk.jac + pk.jac.transpose() * dj);
    }
  }
  return dD;
}

DynamicsTerms dynamics_terms(const Vec4& q, const Vec4& dq, const RobotParams& params) {
  const Kinematics kin = kinematics(q, params);
  DynamicsTerms t;
  t.D.setZero();
  t.G.setZero();
  for (int i = 0; i < 4; ++i) {
    const auto& l = params.links[i];
    const auto& J = kin.link_com[i].jac;
    const Eigen::RowVector4d w = angle_row(i);
    t.D += l.mass * J.transpose() * J + l.inertia * w.transpose() * w;
    t.G += l.mass * params.g0 * J.row(1).transpose();
  }

  const auto dD = mass_matrix_derivatives(q, params);
  t.Cmat.setZero();
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i)
        t.Cmat(k, j) += 0.5 * (dD[i](k, j) + dD[j](k, i) - dD[k](i, j)) * dq[i];
  t.C = t.Cmat * dq;
  return t;
}

double total_energy(const FullState& x, const RobotParams& params) {
  const auto t = dynamics_terms(x.q, x.dq, params);
  const Kinematics kin = kinematics(x.q, params);
  return 0.5 * x.dq.dot(t.D * x.dq) + params.total_mass() * params.g0 * kin.com.p.y();
}

double angular_momentum(const Vec4& q, const Vec4& dq, const Vec2& pivot, const RobotParams& params) {
  const Kinematics kin = kinematics(q, params);
  const Vec4 w = angle_rates(dq);
  double sigma = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& l = params.links[i];
    const Vec2 v = kin.link_com[i].jac * dq;
    sigma += l.inertia * w[i] + l.mass * cross2(kin.link_com[i].p - pivot, v);
  }
  return sigma;
}

Vec4 joint_accelerations(const FullState& x, double u1, const Vec3& ub, const RobotParams& params) {
  const auto t = dynamics_terms(x.q, x.dq, params);
  Vec4 tau;
  tau << u1, ub;
  return t.D.ldlt().solve(tau - t.C - t.G);
}

Vec8 pinned_flow(const FullState& x, double u1, const Vec3& ub, const RobotParams& params) {
  Vec8 dx;
  dx << x.dq, joint_accelerations(x, u1, ub, params);
  return dx;
}

GroundReaction ground_reaction_from_accel(const FullState& x, const Vec4& ddq, double u1,
                                          const RobotParams& params, double friction) {
  const Kinematics kin = kinematics(x.q, params, x.dq);
  const double m = params.total_mass();
  const Vec2 acc = kin.com.jac * ddq + kin.com.bias;
  GroundReaction gr;
  gr.tangential = m * acc.x();
  gr.normal = m * (acc.y() + params.g0);
  // Foot is massless and static: the ground moment about the ankle balances u1.
  gr.fri = gr.normal != 0.0 ? u1 / gr.normal : std::numeric_limits<double>::quiet_NaN();
  gr.unilateral_ok = gr.normal > 0.0;
  gr.friction_ok = std::abs(gr.tangential) <= friction * gr.normal;
  gr.fri_in_foot = gr.unilateral_ok && gr.fri >= params.x_heel && gr.fri <= params.x_toe;
  return gr;
}

GroundReaction ground_reaction(const FullState& x, double u1, const Vec3& ub, const RobotParams& params,
                               double friction) {
  return ground_reaction_from_accel(x, joint_accelerations(x, u1, ub, params), u1, params, friction);
}

Vec4 relabel_configuration(const Vec4& q) {
  return {wrap_angle(-q[0] - q[1] - q[2]), q[2], q[1], q[0]};
}

Vec4 flat_foot_configuration(double q1, double q2, const RobotParams& params) {
  const double th1 = kPi + q1;
  const double th2 = th1 + q2;
  const Vec2 hip = params.links[0].length * dir(th1) + params.links[1].length * dir(th2);
  const double s = hip.y() / params.links[2].length;
  if (!(s > 0.0 && s <= 1.0))
    throw Error(ErrorCode::InvalidState, "swing leg cannot reach the ground from this pelvis pose");
  const double th3 = -kPi / 2.0 + std::acos(s);
  const double th4 = -kPi;
  return {q1, q2, th3 - th2, th4 - th3};
}

ImpactResult impact_map(const FullState& pre, const RobotParams& params, const ImpactOptions& opts) {
  if (!pre.finite()) throw Error(ErrorCode::InvalidState, "non-finite pre-impact state");
  const Kinematics kin = kinematics(pre.q, params);
  const double h = std::max(std::abs(kin.heel.p.y()), std::abs(kin.toe.p.y()));
  if (h > opts.guard_tol)
    throw Error(ErrorCode::InvalidState, "swing foot not on the ground at impact (height " + std::to_string(h) + ")");

  // Unpinned model: coordinates [q; base_x; base_y], base = stance ankle.
  const double m = params.total_mass();
  const auto t = dynamics_terms(pre.q, Vec4::Zero(), params);
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  Mat6 De = Mat6::Zero();
  De.topLeftCorner<4, 4>() = t.D;
  De.topRightCorner<4, 2>() = m * kin.com.jac.transpose();
  De.bottomLeftCorner<2, 4>() = m * kin.com.jac;
  De.bottomRightCorner<2, 2>() = m * Eigen::Matrix2d::Identity();

  Eigen::Matrix<double, 4, 6> E;
  E.topLeftCorner<2, 4>() = kin.heel.jac;
  E.bottomLeftCorner<2, 4>() = kin.toe.jac;
  E.topRightCorner<2, 2>().setIdentity();
  E.bottomRightCorner<2, 2>().setIdentity();

  // [De -E'; E 0] [dqe+; F] = [De dqe-; 0]; E has rank 3 for a rigid foot.
  Eigen::Matrix<double, 10, 10> K = Eigen::Matrix<double, 10, 10>::Zero();
  K.topLeftCorner<6, 6>() = De;
  K.topRightCorner<6, 4>() = -E.transpose();
  K.bottomLeftCorner<4, 6>() = E;
  Eigen::Matrix<double, 6, 1> dqe_pre;
  dqe_pre << pre.dq, 0.0, 0.0;
  Eigen::Matrix<double, 10, 1> rhs = Eigen::Matrix<double, 10, 1>::Zero();
  rhs.head<6>() = De * dqe_pre;
  Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix<double, 10, 10>> cod;
  cod.setThreshold(1e-12);
  cod.compute(K);
  const Eigen::Matrix<double, 10, 1> sol = cod.solve(rhs);
  const Eigen::Matrix<double, 6, 1> dqe = sol.head<6>();

  ImpactResult r;
  r.impulse_heel = sol.segment<2>(6);
  r.impulse_toe = sol.segment<2>(8);
  r.impulse = r.impulse_heel + r.impulse_toe;
  r.lifted_foot_velocity = dqe.tail<2>();
  r.unpinned_velocity = dqe;
  r.sigma_pre = angular_momentum(pre.q, pre.dq, Vec2::Zero(), params);

  // Relabel: absolute rates map as (w1, w2, w3, w4) -> (-w3, -w2, -w1, 0).
  const Vec4 w = angle_rates(dqe.head<4>());
  const Vec4 wn(-w[2], -w[1], -w[0], 0.0);
  r.post.q = relabel_configuration(pre.q);
  r.post.dq << wn[0], wn[1] - wn[0], wn[2] - wn[1], wn[3] - wn[2];
  r.sigma_post = angular_momentum(r.post.q, r.post.dq, Vec2::Zero(), params);

  const double fy = std::min(r.impulse_heel.y(), r.impulse_toe.y());
  r.unilateral_margin = std::max(-fy, std::abs(r.impulse.x()) - opts.friction * r.impulse.y()) / m;
  r.liftoff_margin = -r.lifted_foot_velocity.y();

  if (opts.throw_on_infeasible) {
    if (r.unilateral_margin > 0.0)
      throw Error(ErrorCode::ImpactInfeasible, "ground impulse violates the unilateral/friction constraint");
    if (r.liftoff_margin > 0.0)
      throw Error(ErrorCode::ImpactInfeasible, "former stance foot does not lift off");
  }
  return r;
}

}  // namespace fhzd
