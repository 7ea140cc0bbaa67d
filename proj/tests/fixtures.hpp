#pragma once

#include "fhzd/reference.hpp"

namespace fixture {

using namespace fhzd;

using Shape = ReferenceShape;

inline Shape walking() { return walking_shape(); }

inline GaitParams raw_gait(const RobotParams& p, const Shape& sh = {}) { return reference_gait(p, sh); }

inline GaitParams corrected_gait(const RobotParams& p, const Shape& sh = {}) {
  const GaitParams g = raw_gait(p, sh);
  return impose_hybrid_invariance(g, g.beta_r_minus, p);
}

}  // namespace fixture
