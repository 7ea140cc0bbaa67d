#pragma once

#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "fhzd/types.hpp"

namespace fhzd {

/// Inertial and geometric data of one link.
///
/// `com` is the centre-of-mass offset in the link frame: x along the link,
/// y rotated -90 deg from x. Legs (links 1 and 3) measure the offset from
/// their ankle end, so a symmetric robot carries identical leg entries.
/// The pelvis (link 2) measures from the stance hip, the swing foot (link 4)
/// from the swing ankle.
struct LinkParams {
  double mass = 0.0;     // kg
  Vec2 com = Vec2::Zero();  // m
  double inertia = 0.0;  // kg m^2, about the CoM
  double length = 0.0;   // m
};

/// Planar four-link frontal biped: stance leg, pelvis, swing leg, swing foot.
///
/// Angles: q1 is the stance ankle, q2..q4 are relative joint angles. The
/// absolute angle of link i (counter-clockwise from the world +x axis, y up)
/// is pi + q1 + ... + qi. Upright stance leg is q1 = -pi/2; the swing leg
/// sits on the +x side of the stance ankle.
struct RobotParams {
  std::array<LinkParams, 4> links;
  double g0 = 9.81;          // m/s^2
  double x_heel = -0.1;      // m, foot contact segment relative to ankle
  double x_toe = 0.1;        // m
  double step_length = 1.0;  // m, L_s in the cost normalisation

  double total_mass() const;

  /// Throws Error{InvalidParams} when an invariant does not hold.
  void validate() const;

  /// Default robot with the documented defaults for g0, feet and L_s.
  static RobotParams table1();
};

void to_json(nlohmann::json& j, const RobotParams& p);
void from_json(const nlohmann::json& j, RobotParams& p);

RobotParams load_robot(const std::string& path);

}  // namespace fhzd
