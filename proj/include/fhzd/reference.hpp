#pragma once

// Hand-built gaits for the default robot: symmetric A-frame touchdown, pelvis
// hiked towards the swing side mid-step, swing foot kept flat. Control points
// are written in absolute link angles and converted.

#include "fhzd/optimizer.hpp"

namespace fhzd {

struct ReferenceShape {
  double lean = 0.05;          // stance lean at touchdown, rad
  double reversal = 0.06;      // beta_r_minus + pi/2, first guess
  double tilt = 0.08;          // pelvis hike mid-step
  // Desired FRI (m) at rising start, at the reversal and at touchdown.
  double fri_start = -0.05;
  double fri_reversal = -0.05;
  double fri_end = -0.05;
};

/// Shape with a reversal and enough margin to absorb 20% extra energy.
ReferenceShape walking_shape();

/// Degree-5 joint and degree-3 FRI rows, landing pose applied, invariance not imposed.
GaitParams reference_gait(const RobotParams& params, const ReferenceShape& shape);

/// Walking shape with the reversal solved; stable, C01-C08 satisfied.
GaitParams example_gait(const RobotParams& params);

/// Walking shape with the swing hip bent 0.2 rad harder before touchdown:
/// evaluable, but the landing impulse leaves the friction cone (C07) and the
/// step is too slow (C09).
GaitParams example_seed_gait(const RobotParams& params);

/// Optimization problem around example_seed_gait with a 0.7 s step target.
GaitProblem example_problem(const RobotParams& params);

}  // namespace fhzd
