#pragma once

#include <array>

#include "fhzd/robot.hpp"
#include "fhzd/types.hpp"

namespace fhzd {

/// Pinned-model state: joint angles and velocities.
struct FullState {
  Vec4 q = Vec4::Zero();
  Vec4 dq = Vec4::Zero();

  Vec3 qb() const { return q.tail<3>(); }
  bool finite() const { return q.allFinite() && dq.allFinite(); }
};

/// Position, Jacobian and velocity-product acceleration term (dJ/dt * dq) of
/// a material point of the chain, stance ankle at the origin.
struct PointKinematics {
  Vec2 p = Vec2::Zero();
  Mat24 jac = Mat24::Zero();
  Vec2 bias = Vec2::Zero();
};

/// Absolute link angles (counter-clockwise from world +x).
Vec4 link_angles(const Vec4& q);

struct Kinematics {
  std::array<Vec2, 4> joints;       // stance ankle, stance hip, swing hip, swing ankle
  std::array<PointKinematics, 4> link_com;
  PointKinematics com;              // whole-body CoM
  PointKinematics heel;             // swing foot end at x_heel
  PointKinematics toe;              // swing foot end at x_toe
};

/// Forward kinematics. `dq` only enters the bias terms.
Kinematics kinematics(const Vec4& q, const RobotParams& params, const Vec4& dq = Vec4::Zero());

struct DynamicsTerms {
  Mat4 D;     // mass matrix
  Mat4 Cmat;  // Coriolis matrix from Christoffel symbols, C = Cmat * dq
  Vec4 C;
  Vec4 G;
};

/// Lagrangian terms of D(q) ddq + C(q, dq) + G(q) = B u.
DynamicsTerms dynamics_terms(const Vec4& q, const Vec4& dq, const RobotParams& params);

/// dD/dq_k for k = 0..3.
std::array<Mat4, 4> mass_matrix_derivatives(const Vec4& q, const RobotParams& params);

/// Kinetic plus potential energy of the pinned chain.
double total_energy(const FullState& x, const RobotParams& params);

/// Angular momentum of the moving chain about a fixed ground-frame point.
double angular_momentum(const Vec4& q, const Vec4& dq, const Vec2& pivot, const RobotParams& params);

/// Joint accelerations for the given torques.
Vec4 joint_accelerations(const FullState& x, double u1, const Vec3& ub, const RobotParams& params);

/// State derivative [dq; ddq] of the pinned model.
Vec8 pinned_flow(const FullState& x, double u1, const Vec3& ub, const RobotParams& params);

struct GroundReaction {
  double normal = 0.0;      // N, positive pushes the robot up
  double tangential = 0.0;  // N
  double fri = 0.0;         // m, horizontal FRI relative to the stance ankle
  bool unilateral_ok = true;
  bool friction_ok = true;
  bool fri_in_foot = true;

  bool ok() const { return unilateral_ok && friction_ok && fri_in_foot; }
};

/// Contact force on the stance foot from the momentum balance of the chain.
GroundReaction ground_reaction(const FullState& x, double u1, const Vec3& ub, const RobotParams& params,
                               double friction = 0.6);

/// Same, from already known accelerations.
GroundReaction ground_reaction_from_accel(const FullState& x, const Vec4& ddq, double u1,
                                          const RobotParams& params, double friction = 0.6);

/// Swap stance and swing legs and mirror the frontal plane. Valid for
/// configurations with the swing foot flat; an involution on that set.
Vec4 relabel_configuration(const Vec4& q);

/// Joint configuration with the swing foot flat on the ground for a given
/// stance angle and pelvis angle q2. The swing leg solution is the one with
/// the swing ankle below the swing hip.
Vec4 flat_foot_configuration(double q1, double q2, const RobotParams& params);

struct ImpactOptions {
  double guard_tol = 1e-6;    // m, allowed foot-end height before impact
  double friction = 0.6;
  bool throw_on_infeasible = true;
};

struct ImpactResult {
  FullState post;              // relabelled, new stance leg pinned
  double sigma_pre = 0.0;      // momentum about the old stance ankle
  double sigma_post = 0.0;     // momentum about the new stance ankle (relabelled frame)
  Vec2 impulse = Vec2::Zero();      // total ground impulse on the landing foot, pre-impact frame
  Vec2 impulse_heel = Vec2::Zero();
  Vec2 impulse_toe = Vec2::Zero();
  Vec2 lifted_foot_velocity = Vec2::Zero();  // former stance ankle, pre-impact frame
  Eigen::Matrix<double, 6, 1> unpinned_velocity = Eigen::Matrix<double, 6, 1>::Zero();  // [dq+; base velocity]
  double unilateral_margin = 0.0;  // <= 0 when both vertical impulses positive and inside the friction cone
  double liftoff_margin = 0.0;     // <= 0 when the former stance foot leaves the ground
};

/// Rigid flat-foot impact solved on the unpinned (base-translating) model,
/// followed by relabelling.
ImpactResult impact_map(const FullState& pre, const RobotParams& params, const ImpactOptions& opts = {});

}  // namespace fhzd
