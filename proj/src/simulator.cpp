#include "fhzd/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/numeric/odeint.hpp>

namespace fhzd {

namespace {

namespace ode = boost::numeric::odeint;
using State = std::array<double, 8>;

FullState to_full(const State& s) {
  FullState x;
  for (int i = 0; i < 4; ++i) {
    x.q[i] = s[i];
    x.dq[i] = s[i + 4];
  }
  return x;
}

State to_state(const FullState& x) {
  State s;
  for (int i = 0; i < 4; ++i) {
    s[i] = x.q[i];
    s[i + 4] = x.dq[i];
  }
  return s;
}

double contact_margin(const GroundReaction& gr, const RobotParams& p, double friction) {
  const double mg = p.total_mass() * p.g0;
  if (!(gr.normal > 0.0)) return -gr.normal / mg;
  return std::max({(std::abs(gr.tangential) - friction * gr.normal) / mg, gr.fri - p.x_toe, p.x_heel - gr.fri});
}

class Runner {
 public:
  Runner(const GaitParams& g, const RobotParams& p, const SimOptions& o) : g_(g), p_(p), o_(o) {}

  SimTrace run(const FullState& x0, int n_steps) {
    if (!x0.finite()) throw Error(ErrorCode::InvalidState, "non-finite initial state");
    if (n_steps < 1) throw Error(ErrorCode::InvalidParams, "need at least one step");
    com0_ = kinematics(x0.q, p_).com.p.y();
    FullState x = x0;
    double t = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      StepRecord rec;
      rec.t_start = t;
      first_ = trace_.samples.size();

      // Rising ends when the FRI momentum vanishes or the constraint runs out
      // at beta_r-, whichever comes first; on the limit cycle they coincide.
      const double s0 = sigma_fri(x, Phase::Rising) >= 0.0 ? 1.0 : -1.0;
      std::tie(t, x) = phase(k, Phase::Rising, t, x, [&](const FullState& z) {
        return std::min(s0 * sigma_fri(z, Phase::Rising), g_.beta_r_minus - z.q[0]);
      });
      if (g_.beta_r_minus - x.q[0] > o_.reversal_window)
        throw Error(ErrorCode::FallDetected, "momentum vanished " + std::to_string(g_.beta_r_minus - x.q[0]) +
                                                 " rad before the reversal; the robot falls back");
      rec.t_reversal = t;
      rec.beta_reversal = x.q[0];
      trace_.events.push_back({EventType::Reversal, k, t, x.q[0], sigma_fri(x, Phase::Rising),
                               angular_momentum(x.q, x.dq, Vec2::Zero(), p_)});

      std::tie(t, x) = phase(k, Phase::Falling, t, x, [&](const FullState& z) { return foot_low(z); });
      const Kinematics kin = kinematics(x.q, p_);
      rec.heel_height = kin.heel.p.y();
      rec.toe_height = kin.toe.p.y();
      trace_.events.push_back({EventType::Touchdown, k, t, x.q[0], std::min(rec.heel_height, rec.toe_height),
                               std::max(rec.heel_height, rec.toe_height)});
      const double sa = angular_momentum(x.q, x.dq, Vec2::Zero(), p_);
      rec.zeta_f_minus = 0.5 * sa * sa;
      rec.t_end = t;
      summarize(rec);

      try {
        rec.impact = impact_map(x, p_, o_.impact);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidState) throw Error(ErrorCode::ImpactInfeasible, e.what());
        throw;
      }
      x = rec.impact.post;
      trace_.steps.push_back(rec);
    }
    return std::move(trace_);
  }

 private:
  double sigma_fri(const FullState& x, Phase ph) const {
    const double p = desired_outputs(g_, ph, x.q[0]).fri;
    return angular_momentum(x.q, x.dq, Vec2(p, 0.0), p_);
  }

  double foot_low(const FullState& x) const {
    const Kinematics k = kinematics(x.q, p_);
    return std::min(k.heel.p.y(), k.toe.p.y());
  }

  void record(int step, Phase ph, double t, const FullState& x) {
    SimSample s;
    s.t = t;
    s.step = step;
    s.phase = ph;
    s.x = x;
    const ControlSolution cs = control_law(x, g_, ph, p_, o_.control);
    s.u1 = cs.u1;
    s.ub = cs.ub;
    s.y = cs.y;
    s.dy = cs.dy;
    s.fri_desired = cs.fri_desired;
    s.condition = cs.condition;
    s.contact = ground_reaction_from_accel(x, cs.ddq, cs.u1, p_, o_.friction);
    s.sigma_ankle = angular_momentum(x.q, x.dq, Vec2::Zero(), p_);
    s.sigma_fri = angular_momentum(x.q, x.dq, Vec2(cs.fri_desired, 0.0), p_);
    const Kinematics k = kinematics(x.q, p_);
    s.heel_height = k.heel.p.y();
    s.toe_height = k.toe.p.y();
    if (o_.enforce_contact && contact_margin(s.contact, p_, o_.friction) > 0.0)
      throw Error(ErrorCode::UnilateralViolation,
                  "contact lost at t = " + std::to_string(t) + " (F_n = " + std::to_string(s.contact.normal) +
                      ", FRI = " + std::to_string(s.contact.fri) + ")");
    trace_.samples.push_back(s);
  }

  // Integrates one phase until `guard` falls to zero; returns the event.
  std::pair<double, FullState> phase(int step, Phase ph, double t0, const FullState& x0,
                                     const std::function<double(const FullState&)>& guard) {
    const ControlOptions& co = o_.control;
    auto rhs = [&](const State& s, State& ds, double) {
      const FullState x = to_full(s);
      const ControlSolution cs = control_law(x, g_, ph, p_, co);
      for (int i = 0; i < 4; ++i) {
        ds[i] = s[i + 4];
        ds[i + 4] = cs.ddq[i];
      }
    };
    auto stepper = ode::make_dense_output(o_.abs_tol, o_.rel_tol, ode::runge_kutta_dopri5<State>());
    stepper.initialize(to_state(x0), t0, std::min(1e-3, o_.sample_dt));

    // Falling starts where rising ended; that sample is already logged.
    if (ph == Phase::Rising) record(step, ph, t0, x0);
    long idx = 1;
    double g_prev = guard(x0);
    State tmp;
    while (true) {
      const auto [ta, tb] = stepper.do_step(rhs);
      const FullState xb = to_full(stepper.current_state());
      if (!xb.finite()) throw Error(ErrorCode::FallDetected, "state diverged");
      const double gb = guard(xb);
      double t_event = std::numeric_limits<double>::infinity();
      if (g_prev > 0.0 && gb <= 0.0) {
        double lo = ta, hi = tb;
        while (hi - lo > o_.event_tol) {
          const double mid = 0.5 * (lo + hi);
          stepper.calc_state(mid, tmp);
          (guard(to_full(tmp)) > 0.0 ? lo : hi) = mid;
        }
        t_event = hi;
      }
      for (double ts; (ts = t0 + idx * o_.sample_dt) < std::min(tb, t_event); ++idx) {
        stepper.calc_state(ts, tmp);
        record(step, ph, ts, to_full(tmp));
      }
      if (std::isfinite(t_event)) {
        stepper.calc_state(t_event, tmp);
        const FullState xe = to_full(tmp);
        record(step, ph, t_event, xe);
        return {t_event, xe};
      }
      if (kinematics(xb.q, p_).com.p.y() < o_.fall_fraction * com0_)
        throw Error(ErrorCode::FallDetected, "CoM dropped during the " + std::string(to_string(ph)) + " phase");
      if (tb - t0 > o_.max_phase_time)
        throw Error(ErrorCode::FallDetected,
                    std::string(to_string(ph)) + " phase did not end within " + std::to_string(o_.max_phase_time) + " s");
      g_prev = gb;
    }
  }

  void summarize(StepRecord& rec) const {
    const auto& s = trace_.samples;
    rec.min_clearance = std::numeric_limits<double>::infinity();
    rec.contact_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = first_; i < s.size(); ++i) {
      if (i > first_ && i + 1 < s.size())
        rec.min_clearance = std::min({rec.min_clearance, s[i].heel_height, s[i].toe_height});
      rec.max_condition = std::max(rec.max_condition, s[i].condition);
      rec.contact_margin = std::max(rec.contact_margin, contact_margin(s[i].contact, p_, o_.friction));
      rec.peak_output_error = std::max(rec.peak_output_error, s[i].y.cwiseAbs().maxCoeff());
    }
    if (!std::isfinite(rec.min_clearance)) rec.min_clearance = 0.0;
    rec.effort = 0.0;
    for (std::size_t i = first_ + 1; i < s.size(); ++i) {
      const double a = s[i - 1].u1 * s[i - 1].u1 + s[i - 1].ub.squaredNorm();
      const double b = s[i].u1 * s[i].u1 + s[i].ub.squaredNorm();
      rec.effort += 0.5 * (a + b) * (s[i].t - s[i - 1].t);
    }
  }

  const GaitParams& g_;
  const RobotParams& p_;
  const SimOptions& o_;
  SimTrace trace_;
  std::size_t first_ = 0;
  double com0_ = 0.0;
};

}  // namespace

std::string_view to_string(EventType e) { return e == EventType::Reversal ? "reversal" : "touchdown"; }

std::vector<double> SimTrace::zeta_f_minus() const {
  std::vector<double> z;
  for (const auto& s : steps) z.push_back(s.zeta_f_minus);
  return z;
}

double SimTrace::peak_output_error() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.peak_output_error);
  return m;
}

FullState step_start_state(const GaitParams& gait, double zeta_f_minus, const RobotParams& params,
                           const ImpactOptions& impact) {
  if (!(zeta_f_minus > 0.0)) throw Error(ErrorCode::InvalidState, "zeta_f- must be positive");
  const double I = kappas(gait.beta_f_minus, Phase::Falling, gait, params, false).inertia;
  const double dbeta = -std::sqrt(2.0 * zeta_f_minus) / std::abs(I);
  return impact_map(manifold_state(gait, Phase::Falling, gait.beta_f_minus, dbeta), params, impact).post;
}

SimTrace simulate_steps(const GaitParams& gait, const FullState& x0, int n_steps, const RobotParams& params,
                        const SimOptions& opts) {
  return Runner(gait, params, opts).run(x0, n_steps);
}

double effort_from_samples(const SimTrace& trace, int step) {
  double e = 0.0;
  const SimSample* prev = nullptr;
  for (const auto& s : trace.samples) {
    if (s.step != step) continue;
    if (prev) {
      const double a = prev->u1 * prev->u1 + prev->ub.squaredNorm();
      const double b = s.u1 * s.u1 + s.ub.squaredNorm();
      e += 0.5 * (a + b) * (s.t - prev->t);
    }
    prev = &s;
  }
  return e;
}

void to_json(nlohmann::json& j, const ConstraintConfig& c) {
  j = nlohmann::json{{"stability_margin", c.stability_margin}, {"reversal_tol", c.reversal_tol},
                     {"max_condition", c.max_condition},       {"touchdown_tol", c.touchdown_tol},
                     {"clearance", c.clearance},               {"step_time", c.step_time},
                     {"step_time_tol", c.step_time_tol}};
}

void from_json(const nlohmann::json& j, ConstraintConfig& c) {
  ConstraintConfig d;
  d.stability_margin = j.value("stability_margin", d.stability_margin);
  d.reversal_tol = j.value("reversal_tol", d.reversal_tol);
  d.max_condition = j.value("max_condition", d.max_condition);
  d.touchdown_tol = j.value("touchdown_tol", d.touchdown_tol);
  d.clearance = j.value("clearance", d.clearance);
  d.step_time = j.value("step_time", d.step_time);
  d.step_time_tol = j.value("step_time_tol", d.step_time_tol);
  c = d;
}

ConstraintVector check_gait_constraints(const GaitParams& gait, const SimTrace& trace,
                                        const PoincareAnalysis& analysis, const ReversalResult& reversal,
                                        const ConstraintConfig& config) {
  (void)gait;
  if (trace.steps.empty()) throw Error(ErrorCode::InvalidParams, "constraint check needs a simulated step");
  const StepRecord& s = trace.steps.back();
  ConstraintVector c;
  const double c01 = analysis.slope - 1.0 + config.stability_margin;
  c[0] = analysis.in_domain ? c01 : std::max(c01, 1.0);
  c[1] = reversal.converged ? reversal.residual - config.reversal_tol : 1.0;
  c[2] = std::log10(s.max_condition / config.max_condition);
  c[3] = std::max(std::abs(s.heel_height), std::abs(s.toe_height)) - config.touchdown_tol;
  c[4] = config.clearance - s.min_clearance;
  c[5] = s.contact_margin;
  c[6] = s.impact.unilateral_margin;
  c[7] = s.impact.liftoff_margin;
  c[8] = std::abs(s.duration() - config.step_time) - config.step_time_tol;
  return c;
}

}  // namespace fhzd
