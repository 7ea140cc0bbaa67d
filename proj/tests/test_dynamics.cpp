#include <boost/numeric/odeint.hpp>

#include <random>

#include "doctest.h"
#include "fhzd/dynamics.hpp"
#include "oracles.hpp"

using namespace fhzd;

namespace {

const RobotParams kRobot = RobotParams::table1();
const Vec4 kQ(-1.65, -1.45, -1.55, -1.6);
const Vec4 kDq(0.3, -0.7, 1.1, -0.4);

Vec4 random_q(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  return {u(rng), u(rng), u(rng), u(rng)};
}

// Configuration where every distal subchain hangs balanced, so G = 0.
Vec4 balanced_configuration() {
  Vec4 q(-1.5708, -1.5708, -1.5708, -1.5708);
  for (int it = 0; it < 50; ++it) {
    const Vec4 g = dynamics_terms(q, Vec4::Zero(), kRobot).G;
    if (g.norm() < 1e-13) break;
    Mat4 J;
    for (int k = 0; k < 4; ++k) {
      Vec4 e = Vec4::Zero();
      e[k] = 1e-7;
      J.col(k) = (dynamics_terms(q + e, Vec4::Zero(), kRobot).G - dynamics_terms(q - e, Vec4::Zero(), kRobot).G) / 2e-7;
    }
    q -= J.completeOrthogonalDecomposition().solve(g);
  }
  return q;
}

}  // namespace

TEST_CASE("default robot validates and totals 60.5 kg") {
  CHECK_NOTHROW(kRobot.validate());
  CHECK(kRobot.total_mass() == doctest::Approx(60.5).epsilon(1e-14));

  RobotParams bad = kRobot;
  bad.links[2].mass = 12.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = kRobot;
  bad.x_heel = 0.01;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = kRobot;
  bad.links[3].inertia = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("robot JSON round trip preserves every field") {
  const nlohmann::json j = kRobot;
  const RobotParams back = j.get<RobotParams>();
  CHECK(nlohmann::json(back) == j);
  CHECK(j.at("link2_com")[1].get<double>() == -0.20);
}

TEST_CASE("Coriolis vanishes at rest") {
  const auto t = dynamics_terms(kQ, Vec4::Zero(), kRobot);
  CHECK(t.C.norm() == 0.0);
}

TEST_CASE("mass matrix matches the Hessian of a link-by-link kinetic energy") {
  const auto t = dynamics_terms(kQ, kDq, kRobot);
  const auto ke = [&](const Vec4& dq) { return oracle::kinetic_energy(kQ, dq, kRobot); };
  const Mat4 H = oracle::hessian(ke, kDq, 0.5);
  CHECK((H - t.D).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gravity torque on the ankle equals total weight times the CoM lever arm") {
  const Vec4 upright(-std::numbers::pi / 2, -std::numbers::pi / 2, -std::numbers::pi / 2, -std::numbers::pi / 2);
  for (const Vec4& q : {upright, kQ}) {
    const auto t = dynamics_terms(q, Vec4::Zero(), kRobot);
    const Vec2 c = kinematics(q, kRobot).com.p;
    CHECK(t.G[0] == doctest::Approx(60.5 * 9.81 * c.x()).epsilon(1e-12).scale(1.0));
    CHECK(std::abs(t.G[0] - 60.5 * 9.81 * c.x()) < 1e-9);
  }
}

TEST_CASE("CoM matches an independent forward-kinematics chain") {
  std::mt19937 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec4 q = i == 0 ? kQ : random_q(rng);
    const Kinematics k = kinematics(q, kRobot);
    CHECK((k.com.p - oracle::com(q, kRobot)).norm() < 1e-12);
  }
}

TEST_CASE("symmetric double support puts the leg-pelvis CoM midway between the ankles") {
  const Vec4 q = flat_foot_configuration(-std::numbers::pi / 2 - 0.12, -std::numbers::pi / 2 + 0.12, kRobot);
  const Kinematics k = kinematics(q, kRobot);
  Vec2 c = Vec2::Zero();
  double m = 0.0;
  for (int i = 0; i < 3; ++i) {
    c += kRobot.links[i].mass * k.link_com[i].p;
    m += kRobot.links[i].mass;
  }
  c /= m;
  CHECK(std::abs(c.x() - 0.5 * k.joints[3].x()) < 1e-12);
}

TEST_CASE("flat-foot configuration puts both swing-foot ends on the ground") {
  for (double q2 : {-1.5, -1.55, -1.6}) {
    const Vec4 q = flat_foot_configuration(-1.7, q2, kRobot);
    const Kinematics k = kinematics(q, kRobot);
    CHECK(std::abs(k.heel.p.y()) < 1e-12);
    CHECK(std::abs(k.toe.p.y()) < 1e-12);
    CHECK(k.toe.p.x() < k.heel.p.x());
  }
}

TEST_CASE("point Jacobians and bias terms agree with finite differences") {
  const double h = 1e-6;
  const auto pos = [&](const Vec4& q) { return kinematics(q, kRobot).toe.p; };
  const Kinematics k = kinematics(kQ, kRobot, kDq);
  const Vec2 v_fd = (pos(kQ + h * kDq) - pos(kQ - h * kDq)) / (2 * h);
  CHECK((k.toe.jac * kDq - v_fd).norm() < 1e-8);
  const Vec2 a_fd = (pos(kQ + h * kDq) - 2 * pos(kQ) + pos(kQ - h * kDq)) / (h * h);
  CHECK((k.toe.bias - a_fd).norm() < 1e-3);
}

TEST_CASE("angular momentum") {
  SUBCASE("vanishes at rest for any pivot") {
    CHECK(angular_momentum(kQ, Vec4::Zero(), Vec2(0.3, -0.2), kRobot) == 0.0);
  }
  SUBCASE("transfer between pivots") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 50; ++i) {
      const Vec4 q = random_q(rng);
      const Vec4 dq(u(rng), u(rng), u(rng), u(rng));
      const Vec2 p(u(rng), 0.0);
      const Kinematics k = kinematics(q, kRobot);
      const Vec2 vcm = k.com.jac * dq;
      const double transfer = 60.5 * cross2(p, vcm);
      const double lhs = angular_momentum(q, dq, Vec2::Zero(), kRobot) - angular_momentum(q, dq, p, kRobot);
      CHECK(std::abs(lhs - transfer) < 1e-10);
    }
  }
  SUBCASE("equals dL/d(dq1)") {
    for (const Vec4& dq : {Vec4(1, 0, 0, 0), kDq}) {
      const auto t = dynamics_terms(kQ, dq, kRobot);
      CHECK(std::abs(angular_momentum(kQ, dq, Vec2::Zero(), kRobot) - (t.D * dq)[0]) < 1e-10);
    }
  }
}

TEST_CASE("mass matrix is symmetric positive definite on random configurations") {
  std::mt19937 rng(11);
  double min_eig = 1e300;
  double max_asym = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Mat4 D = dynamics_terms(random_q(rng), Vec4::Zero(), kRobot).D;
    max_asym = std::max(max_asym, (D - D.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat4>(D).eigenvalues().minCoeff());
  }
  CHECK(max_asym < 1e-12);
  CHECK(min_eig > 0.0);
}

TEST_CASE("dD/dt - 2 C is skew-symmetric") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const Vec4 q = random_q(rng);
    const Vec4 dq(u(rng), u(rng), u(rng), u(rng));
    const double h = 1e-6;
    const Mat4 Ddot = (dynamics_terms(q + h * dq, dq, kRobot).D - dynamics_terms(q - h * dq, dq, kRobot).D) / (2 * h);
    const Mat4 N = Ddot - 2 * dynamics_terms(q, dq, kRobot).Cmat;
    CHECK((N + N.transpose()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("pinned flow") {
  SUBCASE("balanced configuration at rest is an equilibrium") {
    const Vec4 q = balanced_configuration();
    const Vec8 dx = pinned_flow({q, Vec4::Zero()}, 0.0, Vec3::Zero(), kRobot);
    CHECK(dx.norm() < 1e-10);
    const auto gr = ground_reaction({q, Vec4::Zero()}, 0.0, Vec3::Zero(), kRobot);
    CHECK(gr.normal == doctest::Approx(60.5 * 9.81).epsilon(1e-12));
    CHECK(std::abs(gr.tangential) < 1e-9);
    CHECK(std::abs(gr.fri - kinematics(q, kRobot).com.p.x()) < 1e-12);
  }
  SUBCASE("accelerations satisfy the equations of motion") {
    const FullState x{kQ, kDq};
    const double u1 = 3.0;
    const Vec3 ub(-10, 4, 0.5);
    const Vec8 dx = pinned_flow(x, u1, ub, kRobot);
    const auto t = dynamics_terms(kQ, kDq, kRobot);
    Vec4 tau;
    tau << u1, ub;
    CHECK((t.D * dx.tail<4>() + t.C + t.G - tau).norm() < 1e-10);
  }
  SUBCASE("passive motion conserves energy") {
    using State = std::array<double, 8>;
    namespace ode = boost::numeric::odeint;
    State s;
    for (int i = 0; i < 4; ++i) {
      s[i] = kQ[i];
      s[4 + i] = 0.5 * kDq[i];
    }
    auto rhs = [](const State& s, State& ds, double) {
      FullState x;
      for (int i = 0; i < 4; ++i) {
        x.q[i] = s[i];
        x.dq[i] = s[4 + i];
      }
      const Vec8 d = pinned_flow(x, 0.0, Vec3::Zero(), kRobot);
      for (int i = 0; i < 8; ++i) ds[i] = d[i];
    };
    const auto energy = [](const State& s) {
      FullState x;
      for (int i = 0; i < 4; ++i) {
        x.q[i] = s[i];
        x.dq[i] = s[4 + i];
      }
      return total_energy(x, kRobot);
    };
    const double e0 = energy(s);
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-12, 1e-10), rhs, s, 0.0, 1.0, 1e-3);
    CHECK(std::abs(energy(s) - e0) <= 10 * 1e-10 * std::abs(e0));
  }
}

TEST_CASE("ground reaction equals the finite-difference momentum rate") {
  const FullState x{kQ, kDq};
  const double u1 = 2.0;
  const Vec3 ub(5, -3, 1);
  const auto gr = ground_reaction(x, u1, ub, kRobot);
  const Vec8 dx = pinned_flow(x, u1, ub, kRobot);
  const double h = 1e-5;
  const auto vcm = [&](double dt) {
    const Vec4 q = kQ + dt * dx.head<4>() + 0.5 * dt * dt * dx.tail<4>();
    const Vec4 dq = kDq + dt * dx.tail<4>();
    return Vec2(kinematics(q, kRobot).com.jac * dq);
  };
  const Vec2 acc = (vcm(h) - vcm(-h)) / (2 * h);
  CHECK(gr.tangential == doctest::Approx(60.5 * acc.x()).epsilon(1e-4));
  CHECK(gr.normal == doctest::Approx(60.5 * (acc.y() + 9.81)).epsilon(1e-4));
  CHECK(gr.fri == doctest::Approx(u1 / gr.normal));
}

TEST_CASE("relabelling is an involution on flat-foot configurations") {
  for (double q1 : {-1.8, -1.7, -1.6}) {
    for (double q2 : {-1.62, -1.55}) {
      const Vec4 q = flat_foot_configuration(q1, q2, kRobot);
      const Vec4 back = relabel_configuration(relabel_configuration(q));
      CHECK((back - q).norm() < 1e-12);
      const Vec4 r = relabel_configuration(q);
      const Kinematics k = kinematics(r, kRobot);
      CHECK(std::abs(k.heel.p.y()) < 1e-12);
      CHECK(std::abs(k.toe.p.y()) < 1e-12);
    }
  }
}

TEST_CASE("relabelled configuration mirrors the link CoMs about the new stance ankle") {
  const Vec4 q = flat_foot_configuration(-1.72, -1.5, kRobot);
  const Kinematics k = kinematics(q, kRobot);
  const Kinematics kr = kinematics(relabel_configuration(q), kRobot);
  const Vec2 ankle = k.joints[3];
  const auto mirror = [&](const Vec2& p) { return Vec2(ankle.x() - p.x(), p.y()); };
  CHECK((kr.link_com[0].p - mirror(k.link_com[2].p)).norm() < 1e-12);
  CHECK((kr.link_com[1].p - mirror(k.link_com[1].p)).norm() < 1e-12);
  CHECK((kr.link_com[2].p - mirror(k.link_com[0].p)).norm() < 1e-12);
  CHECK((kr.joints[3] - mirror(Vec2::Zero())).norm() < 1e-12);
}

TEST_CASE("impact map") {
  const Vec4 q = flat_foot_configuration(-1.75, -1.52, kRobot);

  SUBCASE("no velocity, no impulse") {
    const ImpactResult r = impact_map({q, Vec4::Zero()}, kRobot);
    CHECK(r.post.dq.norm() == 0.0);
    CHECK((r.post.q - relabel_configuration(q)).norm() == 0.0);
  }
  SUBCASE("landing foot is at rest after impact") {
    ImpactOptions opts;
    opts.throw_on_infeasible = false;
    const Vec4 dq(-0.4, 0.2, 0.3, -0.5);
    const ImpactResult r = impact_map({q, dq}, kRobot, opts);
    const Kinematics k = kinematics(q, kRobot);
    const Vec4 dqp = r.unpinned_velocity.head<4>();
    const Vec2 vb = r.unpinned_velocity.tail<2>();
    CHECK((k.heel.jac * dqp + vb).norm() < 1e-10);
    CHECK((k.toe.jac * dqp + vb).norm() < 1e-10);
    // The lifted foot in the relabelled model moves with the mirrored base velocity.
    const Kinematics kr = kinematics(r.post.q, kRobot);
    const Vec2 v4 = kr.link_com[3].jac * r.post.dq;
    CHECK(std::abs(v4.x() + vb.x()) < 1e-10);
    CHECK(std::abs(v4.y() - vb.y()) < 1e-10);
  }
  SUBCASE("momentum ratio is linear in the pre-impact velocity scale") {
    ImpactOptions opts;
    opts.throw_on_infeasible = false;
    const Vec4 dq(-0.4, 0.2, 0.3, -0.5);
    const ImpactResult a = impact_map({q, 0.5 * dq}, kRobot, opts);
    const ImpactResult b = impact_map({q, 2.0 * dq}, kRobot, opts);
    CHECK(a.sigma_post / a.sigma_pre == doctest::Approx(b.sigma_post / b.sigma_pre).epsilon(1e-12));
  }
  SUBCASE("off-guard state is rejected") {
    Vec4 qq = q;
    qq[3] += 0.05;
    CHECK_THROWS_AS(impact_map({qq, Vec4::Zero()}, kRobot), Error);
  }
}
