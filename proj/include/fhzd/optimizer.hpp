#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fhzd/simulator.hpp"

namespace fhzd {

/// Decision vector, in order:
///   b_r columns 2..M        (3 rows each, column-major)
///   b_f columns 2..M-1
///   b_f(0, M)               landing pelvis angle; rows 1-2 follow from the flat-foot pose
///   bfri_r columns 0..N
///   bfri_f columns 1..N
///   beta_f_minus
/// Everything else is fixed by impose_hybrid_invariance.
int decision_size(const GaitParams& layout);
VecX pack_decision(const GaitParams& gait);
/// Writes x into a copy of `layout` and re-applies the landing pose.
GaitParams unpack_decision(const GaitParams& layout, const VecX& x, const RobotParams& params);
std::string decision_name(const GaitParams& layout, int i);

struct OptimizerSettings {
  int max_evaluations = 20000;
  int max_iterations = 300;          // accepted plus rejected trust-region steps
  double fd_step = 1e-6;             // relative
  double central_fd_radius = 1e-3;   // trust radius below which gradients use central differences
  double penalty = 1.0;              // l1 weight on scaled violations, relative to cost / seed cost
  double penalty_growth = 10.0;
  double max_penalty = 1e6;
  double trust_radius = 0.05;        // infinity norm, decision units
  double max_trust_radius = 0.2;
  double min_trust_radius = 1e-7;
  double feasibility_margin = 0.02;  // scaled units kept between the iterate and each constraint boundary
  double cost_tol = 1e-5;            // relative merit decrease counted as progress
  std::array<double, kConstraintCount> scales = {1e-2, 1e-10, 1.0, 1e-8, 1e-3, 1e-2, 1e-2, 1e-2, 1e-2};
  std::vector<int> free_variables;   // empty: all
};

void to_json(nlohmann::json& j, const OptimizerSettings& s);
void from_json(const nlohmann::json& j, OptimizerSettings& s);

struct GaitProblem {
  GaitParams seed;                  // uncorrected; beta_r_minus is the first reversal guess
  VecX lower, upper;                // decision bounds; empty: seed -/+ default widths
  ConstraintConfig constraints;
  double step_length = 1.0;         // m, L_s
  ImpactOptions impact{1e-6, 0.6, false};
  double sample_dt = 1e-3;          // s, trace grid for the cost integral
  OptimizerSettings settings;

  /// Fills empty bounds: +-0.5 rad on angles, +-0.05 m on FRI entries.
  void complete_bounds();
};

void to_json(nlohmann::json& j, const GaitProblem& p);
void from_json(const nlohmann::json& j, GaitProblem& p);
GaitProblem load_problem(const std::string& path);

/// One pass of the chain invariance -> reversal -> analysis -> simulation.
struct GaitEvaluation {
  GaitParams raw;                   // input, beta_r_minus used as the reversal guess
  GaitParams gait;                  // corrected, valid when reversal.converged
  ReversalResult reversal;
  PoincareAnalysis analysis;
  ConstraintVector residuals = ConstraintVector::Constant(1e3);
  std::optional<double> cost;       // N^2 m; empty when the simulation did not complete
  double step_time = 0.0;
  std::string failure;              // first error met, empty if none
};

inline constexpr double kResidualSentinel = 1e3;

/// Never throws on domain failures; unevaluable residuals hold the sentinel.
GaitEvaluation evaluate_gait(const GaitParams& raw, const RobotParams& params, const GaitProblem& problem);

/// J = effort of one step / L_s.
double cost_from_trace(const SimTrace& trace, int step, double step_length);

/// J for an already consistent gait, simulated from its fixed point. Throws CostUndefined.
double cost(const GaitParams& gait, const RobotParams& params, const GaitProblem& problem);

/// Residuals C01..C09 for a raw gait; the sentinel marks anything not evaluable.
ConstraintVector constraint_residuals(const GaitParams& raw, const RobotParams& params, const GaitProblem& problem);

enum class OptimizerStatus { Converged, Infeasible, BudgetExhausted };
std::string_view to_string(OptimizerStatus s);

struct OptimizerLogRow {
  int iteration = 0;
  int evaluations = 0;
  double cost = 0.0;
  double max_residual = 0.0;   // scaled
  double step_norm = 0.0;
  double merit = 0.0;
  double penalty = 0.0;
  double trust_radius = 0.0;
  bool accepted = false;
};

struct GaitSolution {
  GaitParams raw;              // re-evaluating this reproduces every number below bit for bit
  GaitParams gait;
  VecX decision;
  double cost = 0.0;
  double seed_cost = 0.0;
  ConstraintVector residuals = ConstraintVector::Zero();
  ReversalResult reversal;
  PoincareAnalysis analysis;
  double step_time = 0.0;
  int evaluations = 0;
  int iterations = 0;
  OptimizerStatus status = OptimizerStatus::Infeasible;
  std::vector<OptimizerLogRow> log;
};

void to_json(nlohmann::json& j, const GaitSolution& s);
void write_optimizer_log(std::ostream& os, const std::vector<OptimizerLogRow>& log);

/// Trust-region SQP on the l1 penalty (elastic QP subproblems), damped BFGS
/// Hessian, finite-difference gradients.
/// Throws SeedUnevaluable when the seed has no cost.
GaitSolution optimize(const GaitProblem& problem, const RobotParams& params,
                      const std::function<void(const OptimizerLogRow&)>& progress = {});

}  // namespace fhzd
