#include "fhzd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "fhzd/qp.hpp"

namespace fhzd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SimOptions sim_options(const GaitProblem& p) {
  SimOptions o;
  o.enforce_contact = false;
  o.impact = p.impact;
  o.friction = p.impact.friction;
  o.sample_dt = p.sample_dt;
  return o;
}

struct BudgetHit {};

}  // namespace

// ---------------------------------------------------------------- decision vector

int decision_size(const GaitParams& g) {
  const int M = g.degree(), N = g.fri_degree();
  return 3 * (M - 1) + 3 * (M - 2) + 1 + (N + 1) + N + 1;
}

VecX pack_decision(const GaitParams& g) {
  const int M = g.degree(), N = g.fri_degree();
  VecX x(decision_size(g));
  int k = 0;
  for (int c = 2; c <= M; ++c)
    for (int r = 0; r < 3; ++r) x[k++] = g.b_r(r, c);
  for (int c = 2; c < M; ++c)
    for (int r = 0; r < 3; ++r) x[k++] = g.b_f(r, c);
  x[k++] = g.b_f(0, M);
  for (int c = 0; c <= N; ++c) x[k++] = g.bfri_r[c];
  for (int c = 1; c <= N; ++c) x[k++] = g.bfri_f[c];
  x[k++] = g.beta_f_minus;
  return x;
}

GaitParams unpack_decision(const GaitParams& layout, const VecX& x, const RobotParams& params) {
  if (x.size() != decision_size(layout)) throw Error(ErrorCode::InvalidParams, "decision vector has the wrong size");
  GaitParams g = layout;
  const int M = g.degree(), N = g.fri_degree();
  int k = 0;
  for (int c = 2; c <= M; ++c)
    for (int r = 0; r < 3; ++r) g.b_r(r, c) = x[k++];
  for (int c = 2; c < M; ++c)
    for (int r = 0; r < 3; ++r) g.b_f(r, c) = x[k++];
  const double q2 = x[k++];
  for (int c = 0; c <= N; ++c) g.bfri_r[c] = x[k++];
  for (int c = 1; c <= N; ++c) g.bfri_f[c] = x[k++];
  set_landing_pose(g, x[k], q2, params);
  return g;
}

std::string decision_name(const GaitParams& g, int i) {
  const int M = g.degree(), N = g.fri_degree();
  const auto at = [](const char* m, int r, int c) {
    return std::string(m) + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
  };
  if (i < 3 * (M - 1)) return at("b_r", i % 3, 2 + i / 3);
  i -= 3 * (M - 1);
  if (i < 3 * (M - 2)) return at("b_f", i % 3, 2 + i / 3);
  i -= 3 * (M - 2);
  if (i == 0) return at("b_f", 0, M);
  i -= 1;
  if (i <= N) return "bfri_r[" + std::to_string(i) + "]";
  i -= N + 1;
  if (i < N) return "bfri_f[" + std::to_string(i + 1) + "]";
  if (i == N) return "beta_f_minus";
  throw Error(ErrorCode::InvalidParams, "decision index out of range");
}

// ---------------------------------------------------------------- problem I/O

void GaitProblem::complete_bounds() {
  const VecX x = pack_decision(seed);
  const int n = static_cast<int>(x.size()), N = seed.fri_degree();
  VecX w = VecX::Constant(n, 0.5);
  w.segment(n - 1 - (2 * N + 1), 2 * N + 1).setConstant(0.05);
  w[n - 1] = 0.2;
  if (lower.size() == 0) lower = x - w;
  if (upper.size() == 0) upper = x + w;
  if (lower.size() != n || upper.size() != n) throw Error(ErrorCode::InvalidParams, "bounds have the wrong size");
  if ((lower.array() > x.array()).any() || (upper.array() < x.array()).any())
    throw Error(ErrorCode::InvalidParams, "seed lies outside the bounds");
}

void to_json(nlohmann::json& j, const OptimizerSettings& s) {
  j = nlohmann::json{{"max_evaluations", s.max_evaluations},
                     {"max_iterations", s.max_iterations},
                     {"fd_step", s.fd_step},
                     {"central_fd_radius", s.central_fd_radius},
                     {"penalty", s.penalty},
                     {"penalty_growth", s.penalty_growth},
                     {"max_penalty", s.max_penalty},
                     {"trust_radius", s.trust_radius},
                     {"max_trust_radius", s.max_trust_radius},
                     {"min_trust_radius", s.min_trust_radius},
                     {"feasibility_margin", s.feasibility_margin},
                     {"cost_tol", s.cost_tol},
                     {"scales", s.scales},
                     {"free_variables", s.free_variables}};
}

void from_json(const nlohmann::json& j, OptimizerSettings& s) {
  OptimizerSettings d;
  d.max_evaluations = j.value("max_evaluations", d.max_evaluations);
  d.max_iterations = j.value("max_iterations", d.max_iterations);
  d.fd_step = j.value("fd_step", d.fd_step);
  d.central_fd_radius = j.value("central_fd_radius", d.central_fd_radius);
  d.penalty = j.value("penalty", d.penalty);
  d.penalty_growth = j.value("penalty_growth", d.penalty_growth);
  d.max_penalty = j.value("max_penalty", d.max_penalty);
  d.trust_radius = j.value("trust_radius", d.trust_radius);
  d.max_trust_radius = j.value("max_trust_radius", d.max_trust_radius);
  d.min_trust_radius = j.value("min_trust_radius", d.min_trust_radius);
  d.feasibility_margin = j.value("feasibility_margin", d.feasibility_margin);
  d.cost_tol = j.value("cost_tol", d.cost_tol);
  d.scales = j.value("scales", d.scales);
  d.free_variables = j.value("free_variables", d.free_variables);
  if (d.max_evaluations < 1 || d.max_iterations < 1 || !(d.fd_step > 0.0) || !(d.penalty > 0.0) ||
      !(d.penalty_growth > 1.0) || !(d.trust_radius > 0.0) || !(d.max_trust_radius >= d.trust_radius))
    throw Error(ErrorCode::InvalidParams, "bad optimizer settings");
  for (double v : d.scales)
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidParams, "constraint scales must be positive");
  s = d;
}

void to_json(nlohmann::json& j, const GaitProblem& p) {
  const auto vec = [](const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j = nlohmann::json{{"seed", p.seed},
                     {"constraints", p.constraints},
                     {"step_length", p.step_length},
                     {"impact", {{"guard_tol", p.impact.guard_tol}, {"friction", p.impact.friction}}},
                     {"sample_dt", p.sample_dt},
                     {"settings", p.settings}};
  if (p.lower.size()) j["lower"] = vec(p.lower);
  if (p.upper.size()) j["upper"] = vec(p.upper);
}

void from_json(const nlohmann::json& j, GaitProblem& p) {
  const auto vec = [](const std::vector<double>& v) { return VecX(Eigen::Map<const VecX>(v.data(), v.size())); };
  GaitProblem d;
  d.seed = j.at("seed").get<GaitParams>();
  d.constraints = j.value("constraints", d.constraints);
  d.step_length = j.value("step_length", d.step_length);
  if (j.contains("impact")) {
    d.impact.guard_tol = j["impact"].value("guard_tol", d.impact.guard_tol);
    d.impact.friction = j["impact"].value("friction", d.impact.friction);
  }
  d.sample_dt = j.value("sample_dt", d.sample_dt);
  d.settings = j.value("settings", d.settings);
  if (j.contains("lower")) d.lower = vec(j["lower"].get<std::vector<double>>());
  if (j.contains("upper")) d.upper = vec(j["upper"].get<std::vector<double>>());
  if (!(d.step_length > 0.0) || !(d.sample_dt > 0.0))
    throw Error(ErrorCode::InvalidParams, "step_length and sample_dt must be positive");
  const int n = decision_size(d.seed);
  for (int i : d.settings.free_variables)
    if (i < 0 || i >= n) throw Error(ErrorCode::InvalidParams, "free variable index out of range");
  d.complete_bounds();
  p = d;
}

GaitProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open problem file " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j.get<GaitProblem>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------- evaluation

double cost_from_trace(const SimTrace& trace, int step, double step_length) {
  return effort_from_samples(trace, step) / step_length;
}

GaitEvaluation evaluate_gait(const GaitParams& raw, const RobotParams& params, const GaitProblem& problem) {
  GaitEvaluation e;
  e.raw = raw;
  const ConstraintConfig& cfg = problem.constraints;
  try {
    ReversalOptions ro;
    ro.impact = problem.impact;
    const ReversalSolution s = find_reversal(raw, raw.beta_r_minus, params, ro);
    e.gait = s.gait;
    e.reversal = s.result;
    e.residuals[1] = s.result.residual - cfg.reversal_tol;

    e.analysis = fixed_point(e.gait, params, problem.impact);
    const double c01 = e.analysis.slope - 1.0 + cfg.stability_margin;
    e.residuals[0] = e.analysis.in_domain ? c01 : std::max(c01, 1.0);

    const FullState x0 = step_start_state(e.gait, e.analysis.zeta_fixed, params, problem.impact);
    const SimTrace t = simulate_steps(e.gait, x0, 1, params, sim_options(problem));
    e.residuals = check_gait_constraints(e.gait, t, e.analysis, e.reversal, cfg);
    e.cost = cost_from_trace(t, 0, problem.step_length);
    e.step_time = t.steps[0].duration();
  } catch (const Error& err) {
    e.failure = err.what();
  }
  return e;
}

double cost(const GaitParams& gait, const RobotParams& params, const GaitProblem& problem) {
  try {
    const PoincareAnalysis a = fixed_point(gait, params, problem.impact);
    const FullState x0 = step_start_state(gait, a.zeta_fixed, params, problem.impact);
    return cost_from_trace(simulate_steps(gait, x0, 1, params, sim_options(problem)), 0, problem.step_length);
  } catch (const Error& err) {
    throw Error(ErrorCode::CostUndefined, err.what());
  }
}

ConstraintVector constraint_residuals(const GaitParams& raw, const RobotParams& params, const GaitProblem& problem) {
  return evaluate_gait(raw, params, problem).residuals;
}

std::string_view to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::Infeasible: return "infeasible";
    case OptimizerStatus::BudgetExhausted: return "budget_exhausted";
  }
  return "?";
}

void to_json(nlohmann::json& j, const GaitSolution& s) {
  nlohmann::json res;
  for (int i = 0; i < kConstraintCount; ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "C%02d", i + 1);
    res[name] = s.residuals[i];
  }
  j = nlohmann::json{{"status", to_string(s.status)},
                     {"cost", s.cost},
                     {"seed_cost", s.seed_cost},
                     {"step_time", s.step_time},
                     {"residuals", res},
                     {"evaluations", s.evaluations},
                     {"iterations", s.iterations},
                     {"decision", std::vector<double>(s.decision.data(), s.decision.data() + s.decision.size())},
                     {"gait", s.gait},
                     {"raw", s.raw},
                     {"reversal", s.reversal},
                     {"analysis", s.analysis}};
}

void write_optimizer_log(std::ostream& os, const std::vector<OptimizerLogRow>& log) {
  os << "iteration,evaluations,cost,max_residual,step_norm,merit,penalty,trust_radius,accepted\n";
  char buf[320];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.iteration, r.evaluations,
                  r.cost, r.max_residual, r.step_norm, r.merit, r.penalty, r.trust_radius, r.accepted ? 1 : 0);
    os << buf;
  }
}

// ---------------------------------------------------------------- search

namespace {

struct Point {
  VecX x;
  GaitEvaluation e;
  VecX c;  // scaled residuals plus margin
  bool defined() const { return e.cost.has_value(); }
};

struct Model {
  VecX g;  // gradient of cost / seed cost
  MatX A;  // Jacobian of the scaled constraints
};

class Search {
 public:
  Search(const GaitProblem& p, const RobotParams& r) : P_(p), R_(r), S_(p.settings) {
    free_ = S_.free_variables;
    if (free_.empty())
      for (int i = 0; i < decision_size(P_.seed); ++i) free_.push_back(i);
    guess_ = P_.seed.beta_r_minus;
  }

  GaitSolution run(const std::function<void(const OptimizerLogRow&)>& progress) {
    GaitSolution out;
    out.status = OptimizerStatus::Infeasible;
    try {
      Point x = eval(pack_decision(P_.seed));
      if (!x.defined()) throw Error(ErrorCode::SeedUnevaluable, "seed gait has no cost: " + x.e.failure);
      f0_ = *x.e.cost;
      track(x);
      if (search(x, progress)) out.status = OptimizerStatus::Converged;
    } catch (const BudgetHit&) {
      out.status = OptimizerStatus::BudgetExhausted;
    }
    if (!best_feasible_ && out.status == OptimizerStatus::Converged) out.status = OptimizerStatus::Infeasible;

    const Point& b = best_feasible_ ? *best_feasible_ : *best_any_;
    out.raw = b.e.raw;
    out.gait = b.e.gait;
    out.decision = b.x;
    out.cost = *b.e.cost;
    out.seed_cost = f0_;
    out.residuals = b.e.residuals;
    out.reversal = b.e.reversal;
    out.analysis = b.e.analysis;
    out.step_time = b.e.step_time;
    out.evaluations = evals_;
    out.iterations = iter_;
    out.log = std::move(log_);
    return out;
  }

 private:
  // Returns true on convergence.
  bool search(Point x, const std::function<void(const OptimizerLogRow&)>& progress) {
    const int n = static_cast<int>(free_.size()), m = kConstraintCount;
    double nu = S_.penalty, radius = S_.trust_radius;
    Model mod = model(x, radius);
    MatX B = MatX::Identity(n, n);
    VecX lambda = VecX::Zero(m);
    int quiet = 0;  // consecutive accepted steps without meaningful progress

    for (iter_ = 1; iter_ <= S_.max_iterations; ++iter_) {
      VecX d;
      try {
        d = subproblem(x, x.c, mod, B, nu, radius, lambda);
      } catch (const Error&) {
        // Ill-conditioned model: restart the curvature estimate in a smaller region.
        if (B.isIdentity() && radius <= S_.min_trust_radius) return violation(x.c) == 0.0;
        if (!B.isIdentity()) B.setIdentity();
        else radius = std::max(0.25 * radius, S_.min_trust_radius);
        continue;
      }
      const double phi = merit(x, nu);
      const VecX lin = x.c + mod.A * d;
      const double pred = -(mod.g.dot(d) + 0.5 * d.dot(B * d)) + nu * (violation(x.c) - violation(lin));
      const double dn = d.lpNorm<Eigen::Infinity>();

      if (pred <= 1e-12 * std::max(1.0, std::abs(phi)) || dn < S_.min_trust_radius) {
        // Stationary for the current weight.
        if (violation(x.c) == 0.0) return true;
        if (nu >= S_.max_penalty) return false;
        nu = std::min(nu * S_.penalty_growth, S_.max_penalty);
        continue;
      }

      Point t = eval(apply(x.x, d));
      double ared = phi - merit(t, nu);
      double ratio = ared / pred;
      bool accept = t.defined() && ratio > 0.1;
      if (!accept && t.defined()) {
        // Second-order correction against the curvature of the constraints.
        try {
          VecX lam2;
          const VecX d2 = subproblem(x, t.c - mod.A * d, mod, B, nu, radius, lam2);
          Point t2 = eval(apply(x.x, d2));
          const double ared2 = phi - merit(t2, nu);
          if (t2.defined() && ared2 / pred > 0.1) {
            t = std::move(t2);
            d = d2;
            ared = ared2;
            ratio = ared2 / pred;
            accept = true;
          }
        } catch (const Error&) {
        }
      }
      OptimizerLogRow row{iter_, evals_, *(accept ? t : x).e.cost, 0.0, accept ? dn : 0.0, 0.0, nu, radius, accept};

      if (!accept) {
        radius = std::max(0.25 * dn, S_.min_trust_radius);
        if (radius <= S_.min_trust_radius) return violation(x.c) == 0.0;
      } else {
        if (t.e.reversal.converged) guess_ = t.e.reversal.beta_r_minus;
        if (ratio > 0.75 && dn >= 0.99 * radius) radius = std::min(2.0 * radius, S_.max_trust_radius);
        quiet = ared <= S_.cost_tol * std::max(1.0, std::abs(phi)) ? quiet + 1 : 0;

        const Model next = model(t, radius);
        const VecX gl_old = mod.g + mod.A.transpose() * lambda;
        const VecX gl_new = next.g + next.A.transpose() * lambda;
        VecX s(n);
        for (int k = 0; k < n; ++k) s[k] = t.x[free_[k]] - x.x[free_[k]];
        damped_bfgs(B, s, gl_new - gl_old);
        if (B.diagonal().maxCoeff() > 1e6 * B.diagonal().minCoeff()) B.setIdentity();

        // Raise the weight while the linearized constraints stay violated inside the region.
        if (violation(lin) > 0.0 && dn < 0.99 * radius) nu = std::min(nu * S_.penalty_growth, S_.max_penalty);
        x = t;
        mod = next;
      }
      row.max_residual = std::max(0.0, x.c.maxCoeff() - S_.feasibility_margin);
      row.merit = merit(x, nu);
      log_.push_back(row);
      if (progress) progress(row);
      if (quiet >= 3 && violation(x.c) == 0.0) return true;
    }
    return violation(x.c) == 0.0;
  }

  // l1 elastic QP inside the box |d| <= radius, intersected with the bounds.
  VecX subproblem(const Point& x, const VecX& c, const Model& mod, const MatX& B, double nu, double radius,
                  VecX& lambda) const {
    const int n = static_cast<int>(free_.size()), m = kConstraintCount;
    MatX Q = MatX::Zero(n + m, n + m);
    Q.topLeftCorner(n, n) = B;
    VecX q(n + m);
    q << mod.g, VecX::Constant(m, nu);
    MatX G = MatX::Zero(2 * m + 2 * n, n + m);
    VecX h(2 * m + 2 * n);
    G.block(0, 0, m, n) = mod.A;
    G.block(0, n, m, m) = -MatX::Identity(m, m);
    h.head(m) = -c;
    G.block(m, n, m, m) = -MatX::Identity(m, m);
    h.segment(m, m).setZero();
    for (int k = 0; k < n; ++k) {
      const int i = free_[k];
      G(2 * m + k, k) = 1.0;
      h[2 * m + k] = std::min(radius, P_.upper[i] - x.x[i]);
      G(2 * m + n + k, k) = -1.0;
      h[2 * m + n + k] = std::min(radius, x.x[i] - P_.lower[i]);
    }
    const QpResult r = solve_qp(Q, q, G, h, 1e-9, 200);
    lambda = r.multipliers.head(m);
    return r.z.head(n);
  }

  static void damped_bfgs(MatX& B, const VecX& s, const VecX& y) {
    const VecX Bs = B * s;
    const double sBs = s.dot(Bs), sy = s.dot(y);
    if (!(sBs > 0.0)) return;
    const double theta = sy >= 0.2 * sBs ? 1.0 : 0.8 * sBs / (sBs - sy);
    const VecX r = theta * y + (1.0 - theta) * Bs;
    const double sr = s.dot(r);
    if (!(sr > 0.0)) return;
    B += r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
  }

  static double violation(const VecX& c) { return c.cwiseMax(0.0).sum(); }

  double merit(const Point& p, double nu) const {
    if (!p.defined()) return kInf;
    return *p.e.cost / f0_ + nu * violation(p.c);
  }

  VecX apply(const VecX& x0, const VecX& d) const {
    VecX x = x0;
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const int i = free_[k];
      x[i] = std::clamp(x[i] + d[k], P_.lower[i], P_.upper[i]);
    }
    return x;
  }

  Point eval(const VecX& x) {
    if (evals_ >= S_.max_evaluations) throw BudgetHit{};
    ++evals_;
    Point p;
    p.x = x;
    try {
      GaitParams raw = unpack_decision(P_.seed, x, R_);
      raw.beta_r_minus = guess_;
      p.e = evaluate_gait(raw, R_, P_);
    } catch (const Error& e) {
      p.e.failure = e.what();  // landing pose out of reach
    }
    p.c.resize(kConstraintCount);
    for (int i = 0; i < kConstraintCount; ++i) p.c[i] = p.e.residuals[i] / S_.scales[i] + S_.feasibility_margin;
    if (p.defined()) track(p);
    return p;
  }

  // Finite differences; central once the trust region has shrunk.
  Model model(const Point& p, double radius) {
    const int n = static_cast<int>(free_.size());
    const bool central = radius <= S_.central_fd_radius;
    MatX J = MatX::Zero(1 + kConstraintCount, n);
    const auto row = [&](const Point& q) {
      VecX v(1 + kConstraintCount);
      v << *q.e.cost / f0_, q.c;
      return v;
    };
    const VecX r0 = row(p);
    for (int k = 0; k < n; ++k) {
      const int i = free_[k];
      const double h = S_.fd_step * std::max(1.0, std::abs(p.x[i]));
      std::optional<VecX> up, dn;
      const auto probe = [&](double step) -> std::optional<VecX> {
        VecX x = p.x;
        x[i] += step;
        if (x[i] > P_.upper[i] || x[i] < P_.lower[i]) return std::nullopt;
        const Point q = eval(x);
        if (!q.defined()) return std::nullopt;
        return row(q);
      };
      up = probe(h);
      if (central || !up) dn = probe(-h);
      if (up && dn) J.col(k) = (*up - *dn) / (2.0 * h);
      else if (up) J.col(k) = (*up - r0) / h;
      else if (dn) J.col(k) = (r0 - *dn) / h;
    }
    // C02 and C04 are held by the reversal solver and the landing pose; their
    // differences are noise.
    J.row(1 + 1).setZero();
    J.row(1 + 3).setZero();
    return {J.row(0).transpose(), J.bottomRows(kConstraintCount)};
  }

  static bool less(const Point& a, const Point& b, double fa, double fb) {
    if (fa != fb) return fa < fb;
    return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
  }

  void track(const Point& p) {
    if ((p.e.residuals.array() <= 0.0).all() &&
        (!best_feasible_ || less(p, *best_feasible_, *p.e.cost, *best_feasible_->e.cost)))
      best_feasible_ = p;
    const double v = violation(p.c);
    if (!best_any_ || less(p, *best_any_, v, best_any_viol_)) {
      best_any_ = p;
      best_any_viol_ = v;
    }
  }

  const GaitProblem& P_;
  const RobotParams& R_;
  const OptimizerSettings& S_;
  std::vector<int> free_;
  double guess_ = 0.0, f0_ = 1.0;
  int evals_ = 0, iter_ = 0;
  std::optional<Point> best_feasible_, best_any_;
  double best_any_viol_ = kInf;
  std::vector<OptimizerLogRow> log_;
};

}  // namespace

GaitSolution optimize(const GaitProblem& problem, const RobotParams& params,
                      const std::function<void(const OptimizerLogRow&)>& progress) {
  GaitProblem p = problem;
  try {
    p.seed.validate();
    p.complete_bounds();
  } catch (const Error& e) {
    throw Error(ErrorCode::SeedUnevaluable, e.what());
  }
  return Search(p, params).run(progress);
}

}  // namespace fhzd
