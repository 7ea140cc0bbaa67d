#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace fhzd {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

enum class ErrorCode {
  InvalidParams,
  InvalidState,
  ImpactInfeasible,
  SingularRelabeling,
  DegreeTooLow,
  PhaseIntervalDegenerate,
  DecouplingSingular,
  QuadratureFailure,
  TransferSingular,
  OutOfDomain,
  MarginalContraction,
  Undefined,
  AssumptionViolated,
  NoRoot,
  NotConverged,
  FallDetected,
  UnilateralViolation,
  CostUndefined,
  SeedUnevaluable,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a machine-readable code. All library failures
/// surface as this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Planar cross product (z component, counter-clockwise positive).
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace fhzd
