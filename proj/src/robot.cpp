#include "fhzd/robot.hpp"

#include <cmath>
#include <fstream>

namespace fhzd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::ImpactInfeasible: return "ImpactInfeasible";
    case ErrorCode::SingularRelabeling: return "SingularRelabeling";
    case ErrorCode::DegreeTooLow: return "DegreeTooLow";
    case ErrorCode::PhaseIntervalDegenerate: return "PhaseIntervalDegenerate";
    case ErrorCode::DecouplingSingular: return "DecouplingSingular";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::TransferSingular: return "TransferSingular";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::MarginalContraction: return "MarginalContraction";
    case ErrorCode::Undefined: return "Undefined";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::FallDetected: return "FallDetected";
    case ErrorCode::UnilateralViolation: return "UnilateralViolation";
    case ErrorCode::CostUndefined: return "CostUndefined";
    case ErrorCode::SeedUnevaluable: return "SeedUnevaluable";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

double RobotParams::total_mass() const {
  double m = 0.0;
  for (const auto& l : links) m += l.mass;
  return m;
}

void RobotParams::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidParams, msg); };
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto& l = links[i];
    const std::string tag = "link" + std::to_string(i + 1);
    if (!(l.mass > 0.0)) fail(tag + " mass must be positive");
    if (!(l.inertia > 0.0)) fail(tag + " inertia must be positive");
    if (!(l.length > 0.0)) fail(tag + " length must be positive");
    if (!l.com.allFinite()) fail(tag + " CoM must be finite");
  }
  if (!(g0 > 0.0)) fail("g0 must be positive");
  if (!(x_heel < 0.0 && 0.0 < x_toe)) fail("ankle must lie strictly inside the foot (x_heel < 0 < x_toe)");
  if (!(step_length > 0.0)) fail("step_length must be positive");

  const auto& l1 = links[0];
  const auto& l3 = links[2];
  if (l1.mass != l3.mass || l1.inertia != l3.inertia || l1.length != l3.length || l1.com != l3.com)
    fail("legs (links 1 and 3) must be symmetric");
  if (std::abs(links[1].com.x() - 0.5 * links[1].length) > 1e-12)
    fail("pelvis CoM must sit midway between the hips");
}

RobotParams RobotParams::table1() {
  RobotParams p;
  p.links[0] = {12.15, Vec2(0.16, 0.00), 0.400, 0.800};
  p.links[1] = {36.00, Vec2(0.10, -0.20), 5.530, 0.200};
  p.links[2] = {12.15, Vec2(0.16, 0.00), 0.400, 0.800};
  p.links[3] = {0.200, Vec2(0.00, 0.00), 0.030, 0.100};
  return p;
}

void to_json(nlohmann::json& j, const RobotParams& p) {
  j = nlohmann::json::object();
  for (std::size_t i = 0; i < p.links.size(); ++i) {
    const std::string n = std::to_string(i + 1);
    const auto& l = p.links[i];
    j["link" + n + "_com"] = {l.com.x(), l.com.y()};
    j["link" + n + "_inertia"] = l.inertia;
    j["link" + n + "_mass"] = l.mass;
    j["link" + n + "_length"] = l.length;
  }
  j["g0"] = p.g0;
  j["x_heel"] = p.x_heel;
  j["x_toe"] = p.x_toe;
  j["step_length"] = p.step_length;
}

void from_json(const nlohmann::json& j, RobotParams& p) {
  RobotParams out;
  for (std::size_t i = 0; i < out.links.size(); ++i) {
    const std::string n = std::to_string(i + 1);
    auto& l = out.links[i];
    const auto com = j.at("link" + n + "_com").get<std::array<double, 2>>();
    l.com = Vec2(com[0], com[1]);
    l.inertia = j.at("link" + n + "_inertia").get<double>();
    l.mass = j.at("link" + n + "_mass").get<double>();
    l.length = j.at("link" + n + "_length").get<double>();
  }
  out.g0 = j.value("g0", out.g0);
  out.x_heel = j.value("x_heel", out.x_heel);
  out.x_toe = j.value("x_toe", out.x_toe);
  out.step_length = j.value("step_length", out.step_length);
  out.validate();
  p = out;
}

RobotParams load_robot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open robot file " + path);
  nlohmann::json j;
  try {
    in >> j;
    return j.get<RobotParams>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, path + ": " + e.what());
  }
}

}  // namespace fhzd
