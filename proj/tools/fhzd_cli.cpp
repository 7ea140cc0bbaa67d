// Command-line front end.
//
//   fhzd_cli analyze   --robot R --gait G [--tol T]           -> analysis.json
//   fhzd_cli reversal  --robot R --gait G [--tol T]           -> reversal.json, gait_corrected.json
//   fhzd_cli simulate  --robot R --gait G [--steps N] [--svg-stride K] [--zeta-scale S]
//                                                             -> trace.csv, steps.json, snapshots.svg
//   fhzd_cli optimize  --robot R --problem P                  -> solution.json, optimizer_log.csv, gait_optimized.json
//   fhzd_cli export    --robot R --trace trace.csv [--svg-stride K] -> snapshots.svg
//
// --seed-example stands in for missing --robot/--gait/--problem with the
// default robot, the reference gait and the reference problem, and writes them
// to the output directory. Exit 0 ok, 1 domain failure, 2 usage or config.
// FHZD_LOG=0|1|2 sets stderr verbosity.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fhzd/export.hpp"
#include "fhzd/reference.hpp"

using namespace fhzd;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string robot, gait, problem, trace;
  std::string out = "out";
  int steps = 10;
  double tol = 1e-10;
  int svg_stride = 50;
  double zeta_scale = 1.0;
  bool seed_example = false;
};

int verbosity() {
  const char* v = std::getenv("FHZD_LOG");
  return v ? std::atoi(v) : 1;
}

void info(const std::string& s) {
  if (verbosity() >= 1) std::cerr << s << '\n';
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class Runner {
 public:
  explicit Runner(const Config& c) : c_(c) {}

  RobotParams robot() const {
    if (!c_.robot.empty()) return load_robot(c_.robot);
    if (c_.seed_example) return RobotParams::table1();
    throw UsageError("--robot is required (or --seed-example)");
  }

  GaitParams gait(const RobotParams& r) const {
    if (!c_.gait.empty()) return load_gait(c_.gait);
    if (c_.seed_example) return example_gait(r);
    throw UsageError("--gait is required (or --seed-example)");
  }

  GaitProblem problem(const RobotParams& r) const {
    if (!c_.problem.empty()) return load_problem(c_.problem);
    if (c_.seed_example) return example_problem(r);
    throw UsageError("--problem is required (or --seed-example)");
  }

  void materialize(const RobotParams& r) const {
    if (!c_.seed_example) return;
    if (c_.robot.empty()) write_json("robot.json", r);
    if (c_.gait.empty()) write_json("gait.json", example_gait(r));
    if (c_.problem.empty()) write_json("problem.json", example_problem(r));
  }

  ReversalSolution solve(const GaitParams& g, const RobotParams& r) const {
    ReversalOptions o;
    o.step_tol = c_.tol;
    return find_reversal(g, g.beta_r_minus, r, o);
  }

  int analyze() const {
    const RobotParams r = robot();
    const GaitParams g = gait(r);
    materialize(r);
    const ReversalSolution s = solve(g, r);
    const PoincareAnalysis a = fixed_point(s.gait, r);
    write_json("analysis.json", a);
    std::cout << "stable " << (a.stable ? "true" : "false") << " slope " << fmt("%.6f", a.slope) << " zeta* "
              << fmt("%.6f", a.zeta_fixed) << '\n';
    return 0;
  }

  int reversal() const {
    const RobotParams r = robot();
    const GaitParams g = gait(r);
    materialize(r);
    const ReversalSolution s = solve(g, r);
    write_json("reversal.json", s.result);
    write_json("gait_corrected.json", s.gait);
    std::cout << "beta_r- " << fmt("%.12f", s.result.beta_r_minus) << " iterations " << s.result.iterations
              << " residual " << fmt("%.3e", s.result.residual) << '\n';
    return 0;
  }

  int simulate() const {
    if (c_.steps < 1) throw UsageError("--steps must be >= 1");
    const SvgOptions svg = svg_options();
    const RobotParams r = robot();
    const GaitParams g = gait(r);
    materialize(r);
    const ReversalSolution s = solve(g, r);
    const PoincareAnalysis a = fixed_point(s.gait, r);
    const SimTrace t = simulate_steps(s.gait, step_start_state(s.gait, c_.zeta_scale * a.zeta_fixed, r), c_.steps, r);

    std::ostringstream csv;
    write_trace_csv(csv, t);
    write_text("trace.csv", csv.str());
    write_text("snapshots.svg", render_svg(t, r, svg));
    write_json("steps.json", steps_json(t, a));
    std::cout << "steps " << t.steps.size() << " zeta_f- last " << fmt("%.6f", t.steps.back().zeta_f_minus)
              << " zeta* " << fmt("%.6f", a.zeta_fixed) << '\n';
    return 0;
  }

  int optimize_cmd() const {
    const RobotParams r = robot();
    const GaitProblem p = problem(r);
    materialize(r);
    const GaitSolution sol = fhzd::optimize(p, r, [](const OptimizerLogRow& row) {
      if (verbosity() >= 2)
        std::cerr << "iter " << row.iteration << " evals " << row.evaluations << " cost " << fmt("%.3f", row.cost)
                  << " viol " << fmt("%.3e", row.max_residual) << '\n';
    });
    write_json("solution.json", sol);
    write_json("gait_optimized.json", sol.gait);
    std::ostringstream log;
    write_optimizer_log(log, sol.log);
    write_text("optimizer_log.csv", log.str());
    std::cout << "status " << to_string(sol.status) << " cost " << fmt("%.3f", sol.cost) << " seed "
              << fmt("%.3f", sol.seed_cost) << " evaluations " << sol.evaluations << '\n';
    return sol.status == OptimizerStatus::Converged ? 0 : 1;
  }

  int export_cmd() const {
    if (c_.trace.empty()) throw UsageError("--trace is required");
    const SvgOptions svg = svg_options();
    const RobotParams r = robot();
    std::ifstream in(c_.trace);
    if (!in) throw Error(ErrorCode::Io, "cannot open trace " + c_.trace);
    const SimTrace t = read_trace_csv(in);
    write_text("snapshots.svg", render_svg(t, r, svg));
    std::cout << "samples " << t.samples.size() << '\n';
    return 0;
  }

 private:
  SvgOptions svg_options() const {
    if (c_.svg_stride < 1) throw UsageError("--svg-stride must be >= 1");
    SvgOptions o;
    o.stride = c_.svg_stride;
    return o;
  }

  static nlohmann::json steps_json(const SimTrace& t, const PoincareAnalysis& a) {
    nlohmann::json steps = nlohmann::json::array(), events = nlohmann::json::array();
    for (const StepRecord& s : t.steps)
      steps.push_back({{"t_start", s.t_start},
                       {"t_reversal", s.t_reversal},
                       {"t_end", s.t_end},
                       {"beta_reversal", s.beta_reversal},
                       {"zeta_f_minus", s.zeta_f_minus},
                       {"effort", s.effort},
                       {"min_clearance", s.min_clearance},
                       {"max_condition", s.max_condition},
                       {"contact_margin", s.contact_margin},
                       {"peak_output_error", s.peak_output_error},
                       {"impact_unilateral_margin", s.impact.unilateral_margin},
                       {"impact_liftoff_margin", s.impact.liftoff_margin}});
    for (const SimEvent& e : t.events)
      events.push_back({{"type", to_string(e.type)},
                        {"step", e.step},
                        {"time", e.time},
                        {"beta", e.beta},
                        {"residual", e.residual},
                        {"aux", e.aux}});
    return {{"zeta_fixed", a.zeta_fixed}, {"slope", a.slope}, {"steps", steps}, {"events", events}};
  }

  template <class T>
  void write_json(const std::string& name, const T& v) const {
    write_text(name, nlohmann::json(v).dump(2) + "\n");
  }

  void write_text(const std::string& name, const std::string& text) const {
    std::error_code ec;
    fs::create_directories(c_.out, ec);
    const fs::path p = fs::path(c_.out) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f || !(f << text)) throw Error(ErrorCode::Io, "cannot write " + p.string());
    info("wrote " + p.string());
  }

  const Config& c_;
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidParams:
    case ErrorCode::Io:
    case ErrorCode::DegreeTooLow:
    case ErrorCode::PhaseIntervalDegenerate:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frontal-plane hybrid zero dynamics gait tools"};
  app.require_subcommand(1);
  Config c;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--robot", c.robot, "robot parameters JSON");
    sub->add_option("--out", c.out, "output directory");
    sub->add_flag("--seed-example", c.seed_example, "use and write the default robot and reference gait/problem");
  };
  const auto with_gait = [&](CLI::App* sub) {
    sub->add_option("--gait", c.gait, "gait JSON");
    sub->add_option("--tol", c.tol, "reversal fixed-point tolerance, rad")->check(CLI::PositiveNumber);
  };

  CLI::App* analyze = app.add_subcommand("analyze", "reversal + Poincare analysis");
  common(analyze);
  with_gait(analyze);
  CLI::App* reversal = app.add_subcommand("reversal", "solve the reversal point");
  common(reversal);
  with_gait(reversal);
  CLI::App* simulate = app.add_subcommand("simulate", "closed-loop simulation from the fixed point");
  common(simulate);
  with_gait(simulate);
  simulate->add_option("--steps", c.steps, "number of steps");
  simulate->add_option("--svg-stride", c.svg_stride, "samples between SVG snapshots");
  simulate->add_option("--zeta-scale", c.zeta_scale, "initial zeta_f- as a multiple of the fixed point");
  CLI::App* optimize = app.add_subcommand("optimize", "constrained gait optimization");
  common(optimize);
  optimize->add_option("--problem", c.problem, "problem JSON");
  CLI::App* exp = app.add_subcommand("export", "re-render snapshots from a stored trace");
  common(exp);
  exp->add_option("--trace", c.trace, "trace CSV");
  exp->add_option("--svg-stride", c.svg_stride, "samples between SVG snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const Runner run(c);
  try {
    if (*analyze) return run.analyze();
    if (*reversal) return run.reversal();
    if (*simulate) return run.simulate();
    if (*optimize) return run.optimize_cmd();
    if (*exp) return run.export_cmd();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
