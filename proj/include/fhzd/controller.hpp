#pragma once

#include "fhzd/gait.hpp"

namespace fhzd {

struct ControlOptions {
  double bandwidth = 30.0;      // rad/s, critically damped PD on y
  double max_condition = 1e12;  // decoupling matrix
  bool check_decoupling = true;
};

/// Torques and resulting accelerations of the output-zeroing law with the
/// FRI placed on its desired trajectory.
struct ControlSolution {
  Vec4 ddq = Vec4::Zero();
  Vec3 ub = Vec3::Zero();
  double u1 = 0.0;
  Vec3 y = Vec3::Zero();
  Vec3 dy = Vec3::Zero();
  double fri_desired = 0.0;
  double condition = 1.0;  // of the decoupling matrix
};

/// Solves D ddq + C + G = e1 u1 + B ub together with
///   ddy = -kp y - kd dy,   u1 = p m (g0 + ddy_cm).
/// Throws DecouplingSingular when the decoupling matrix is ill-conditioned.
ControlSolution control_law(const FullState& x, const GaitParams& gait, Phase phase, const RobotParams& params,
                            const ControlOptions& opts = {});

/// 3x3 map from ub to ddy with u1 eliminated through the FRI law.
Mat3 decoupling_matrix(const FullState& x, const GaitParams& gait, Phase phase, const RobotParams& params);

/// Ratio of extreme singular values; infinity for a singular matrix.
double condition_number(const Mat3& a);

}  // namespace fhzd
