#pragma once

#include <string_view>
#include <vector>

#include "fhzd/controller.hpp"
#include "fhzd/poincare.hpp"
#include "fhzd/reversal.hpp"

namespace fhzd {

struct SimOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double event_tol = 1e-10;      // s
  double sample_dt = 1e-3;       // s, trace grid inside a phase
  double max_phase_time = 5.0;   // s
  double fall_fraction = 0.5;    // CoM height below this share of its start height is a fall
  double friction = 0.6;
  double reversal_window = 1e-3; // rad, rising momentum vanishing earlier than this before beta_r- is a fall
  bool enforce_contact = true;   // throw UnilateralViolation on a bad contact sample
  ControlOptions control{};
  ImpactOptions impact{};
};

enum class EventType { Reversal, Touchdown };

std::string_view to_string(EventType e);

struct SimEvent {
  EventType type = EventType::Reversal;
  int step = 0;
  double time = 0.0;
  double beta = 0.0;
  double residual = 0.0;  // sigma about the FRI (reversal) or lower foot end height (touchdown)
  double aux = 0.0;       // sigma about the ankle (reversal) or upper foot end height (touchdown)
};

struct SimSample {
  double t = 0.0;
  int step = 0;
  Phase phase = Phase::Rising;
  FullState x;
  double u1 = 0.0;
  Vec3 ub = Vec3::Zero();
  Vec3 y = Vec3::Zero();
  Vec3 dy = Vec3::Zero();
  GroundReaction contact;
  double fri_desired = 0.0;
  double sigma_ankle = 0.0;
  double sigma_fri = 0.0;
  double heel_height = 0.0;
  double toe_height = 0.0;
  double condition = 1.0;
};

/// Per-step bookkeeping; a step is rising, falling and the impact.
struct StepRecord {
  double t_start = 0.0, t_reversal = 0.0, t_end = 0.0;
  double beta_reversal = 0.0;
  double zeta_f_minus = 0.0;     // ankle sigma^2 / 2 just before touchdown
  double effort = 0.0;           // integral of u^T u over the step, trapezoidal
  double min_clearance = 0.0;    // lowest swing-foot end strictly inside the step
  double max_condition = 1.0;
  double contact_margin = 0.0;   // <= 0: F_n > 0, friction cone and FRI in foot on every sample
  double heel_height = 0.0, toe_height = 0.0;  // at touchdown
  double peak_output_error = 0.0;
  ImpactResult impact;

  double duration() const { return t_end - t_start; }
};

struct SimTrace {
  std::vector<SimSample> samples;
  std::vector<SimEvent> events;
  std::vector<StepRecord> steps;

  std::vector<double> zeta_f_minus() const;
  double peak_output_error() const;
};

/// Post-impact state starting a step, obtained by applying the impact to the
/// end-of-falling manifold state with ankle zeta_f- given.
FullState step_start_state(const GaitParams& gait, double zeta_f_minus, const RobotParams& params,
                           const ImpactOptions& impact = {});

/// Closed-loop hybrid simulation from a post-impact state at the start of a
/// rising phase. Throws FallDetected, UnilateralViolation, ImpactInfeasible,
/// DecouplingSingular.
SimTrace simulate_steps(const GaitParams& gait, const FullState& x0, int n_steps, const RobotParams& params,
                        const SimOptions& opts = {});

/// Trapezoidal re-integration of u^T u over the logged samples of a step.
double effort_from_samples(const SimTrace& trace, int step);

struct ConstraintConfig {
  double stability_margin = 1e-3;  // slope <= 1 - margin
  double reversal_tol = 1e-10;     // |Z| at the reversal
  double max_condition = 1e6;      // decoupling matrix
  double touchdown_tol = 1e-8;     // m, both foot ends
  double clearance = 0.0;          // m, minimum swing-foot height inside a step
  double step_time = 0.6;          // s, target
  double step_time_tol = 0.02;     // s
};

void to_json(nlohmann::json& j, const ConstraintConfig& c);
void from_json(const nlohmann::json& j, ConstraintConfig& c);

inline constexpr int kConstraintCount = 9;
using ConstraintVector = Eigen::Matrix<double, kConstraintCount, 1>;

/// C01..C09 from the analysis, the reversal result and the last simulated
/// step. Each entry is <= 0 when satisfied.
ConstraintVector check_gait_constraints(const GaitParams& gait, const SimTrace& trace,
                                        const PoincareAnalysis& analysis, const ReversalResult& reversal,
                                        const ConstraintConfig& config);

}  // namespace fhzd
