#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

#include "fhzd/dynamics.hpp"

namespace fhzd {

enum class Phase { Rising, Falling };

std::string_view to_string(Phase phase);

constexpr int kMaxBezierDegree = 15;

using BezierRow = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxBezierDegree + 1>;
using BezierRows = Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, kMaxBezierDegree + 1>;

/// Virtual constraints of one step.
///
/// Each phase runs s from 0 at its start to 1 at its end:
///   rising   s = (beta - beta_r_plus)  / (beta_r_minus - beta_r_plus)
///   falling  s = (beta - beta_r_minus) / (beta_f_minus - beta_r_minus)
/// so beta increases during rising and decreases during falling. The falling
/// phase starts where rising ends (beta_f_plus == beta_r_minus).
struct GaitParams {
  BezierRows b_r;     // rad, q_b = [q2 q3 q4] against s
  BezierRows b_f;
  BezierRow bfri_r;   // m, desired horizontal FRI
  BezierRow bfri_f;
  double beta_r_plus = 0.0;
  double beta_r_minus = 0.0;
  double beta_f_minus = 0.0;

  int degree() const { return static_cast<int>(b_r.cols()) - 1; }
  int fri_degree() const { return static_cast<int>(bfri_r.cols()) - 1; }

  double beta_start(Phase ph) const { return ph == Phase::Rising ? beta_r_plus : beta_r_minus; }
  double beta_end(Phase ph) const { return ph == Phase::Rising ? beta_r_minus : beta_f_minus; }
  const BezierRows& joints(Phase ph) const { return ph == Phase::Rising ? b_r : b_f; }
  const BezierRow& fri(Phase ph) const { return ph == Phase::Rising ? bfri_r : bfri_f; }

  /// Shapes, degrees and ordering: beta_r_plus < beta_r_minus < 0 and
  /// beta_f_minus < beta_r_minus.
  /// Throws DegreeTooLow, PhaseIntervalDegenerate or InvalidParams.
  void validate() const;
};

void to_json(nlohmann::json& j, const GaitParams& g);
void from_json(const nlohmann::json& j, GaitParams& g);

GaitParams load_gait(const std::string& path);

struct BezierValue {
  double value = 0.0;
  double d1 = 0.0;  // d/ds
  double d2 = 0.0;  // d2/ds2
  bool clamped = false;
};

/// Bernstein-form evaluation with s clamped to [0, 1].
BezierValue bezier_eval(const BezierRow& coeffs, double s);

/// Same without clamping; the polynomial is continued outside [0, 1].
BezierValue bezier_eval_extended(const BezierRow& coeffs, double s);

struct DesiredOutputs {
  Vec3 h = Vec3::Zero();
  Vec3 dh = Vec3::Zero();   // d/dbeta
  Vec3 ddh = Vec3::Zero();
  double fri = 0.0;
  double dfri = 0.0;
  double ddfri = 0.0;
  double s = 0.0;
  bool outside = false;  // s left [0, 1]; values continue the end point to second order
};

DesiredOutputs desired_outputs(const GaitParams& gait, Phase phase, double beta);

/// State on the constraint surface: q = [beta; h_d(beta)], dq = [1; h_d'] dbeta.
FullState manifold_state(const GaitParams& gait, Phase phase, double beta, double dbeta);

/// Output y = q_b - h_d(beta) and its time derivative.
std::pair<Vec3, Vec3> output_error(const GaitParams& gait, Phase phase, const FullState& x);

/// Sets beta_f_minus and the last falling column to the flat-foot landing
/// pose with pelvis angle q2.
void set_landing_pose(GaitParams& gait, double beta_f_minus, double q2, const RobotParams& params);

/// Rewrites the invariance-determined entries for a reversal at
/// beta_r_minus: b_r columns 0-1 and beta_r_plus from the impact map applied
/// at the falling endpoint; b_f columns 0-1 and bfri_f column 0 from the
/// rising endpoint. All other entries are left untouched.
GaitParams impose_hybrid_invariance(const GaitParams& gait, double beta_r_minus, const RobotParams& params,
                                    const ImpactOptions& opts = {});

}  // namespace fhzd
