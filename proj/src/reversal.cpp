#include "fhzd/reversal.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

namespace fhzd {

std::string_view to_string(Multiplicity m) {
  switch (m) {
    case Multiplicity::Single: return "single";
    case Multiplicity::Multiple: return "multiple";
    case Multiplicity::NoneFound: return "none_found";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const ReversalResult& r) {
  j = nlohmann::json{{"beta_r_minus", r.beta_r_minus},
                     {"iterations", r.iterations},
                     {"residual", r.residual},
                     {"bracket", {r.bracket_lo, r.bracket_hi}},
                     {"multiplicity", to_string(r.multiplicity)},
                     {"converged", r.converged},
                     {"history", r.history}};
}

double z_function(const GaitParams& gait, double beta, const RobotParams& params, const ImpactOptions& impact) {
  GaitParams g = gait;
  g.beta_r_minus = beta;
  try {
    const ReturnMap map(g, params, impact);
    return map.delta_r2 * map.delta_z2 * map.offset_f + map.offset_r;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::QuadratureFailure:
      case ErrorCode::PhaseIntervalDegenerate:
      case ErrorCode::TransferSingular:
        throw Error(ErrorCode::Undefined, "Z(" + std::to_string(beta) + "): " + e.what());
      default: throw;
    }
  }
}

double beta_max(const GaitParams& gait, const RobotParams& params) {
  const int M = gait.degree();
  const Vec3 qb = gait.b_r.col(M);
  const double p = gait.bfri_r[gait.fri_degree()];
  auto f = [&](double beta) {
    Vec4 q;
    q << beta, qb;
    return kinematics(q, params).com.p.x() - p;
  };
  const double lo = gait.beta_r_plus;
  const double flo = f(lo);
  if (flo == 0.0) return lo;
  if (!(flo > 0.0))
    throw Error(ErrorCode::AssumptionViolated, "end-of-rising CoM is not on the swing side of the desired FRI");
  const double fhi = f(0.0);
  if (fhi > 0.0) throw Error(ErrorCode::AssumptionViolated, "CoM stays on the swing side of the desired FRI up to beta = 0");
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, 0.0, flo, fhi, [](double a, double b) { return std::abs(b - a) <= 1e-14; }, iters);
  return 0.5 * (r.first + r.second);
}

namespace {

struct Bracket {
  double a, b, fa, fb;
};

using Zfun = std::function<double(double)>;

// Z or NaN where undefined.
double try_z(const Zfun& Z, double b) {
  try {
    return Z(b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Undefined) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Sign scan strictly inside (lo, hi); undefined points break runs.
std::vector<Bracket> scan(const Zfun& Z, double lo, double hi, int n) {
  std::vector<Bracket> out;
  bool have_prev = false;
  double pb = 0.0, pz = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double b = lo + (hi - lo) * i / (n + 1);
    const double z = try_z(Z, b);
    if (std::isnan(z)) {
      have_prev = false;
      continue;
    }
    if (z == 0.0) {
      out.push_back({b, b, 0.0, 0.0});
      have_prev = false;
      continue;
    }
    if (have_prev && (pz < 0.0) != (z < 0.0)) out.push_back({pb, b, pz, z});
    pb = b;
    pz = z;
    have_prev = true;
  }
  return out;
}

// Walk outward from `center` in steps of `h` until Z changes sign.
std::optional<Bracket> local_bracket(const Zfun& Z, double center, double lo, double hi, double h) {
  const double zc = try_z(Z, center);
  if (std::isnan(zc)) return std::nullopt;
  if (zc == 0.0) return Bracket{center, center, 0.0, 0.0};
  double left = center, right = center, zl = zc, zr = zc;
  for (double step = h; left > lo || right < hi; step *= 2.0) {
    if (right < hi) {
      const double b = std::min(center + step, hi - 0.5 * h);
      const double z = try_z(Z, b);
      if (std::isnan(z)) right = hi;
      else if ((z < 0.0) != (zr < 0.0) || z == 0.0) return Bracket{right, b, zr, z};
      else right = b, zr = z;
      if (b >= hi - 0.5 * h) right = hi;
    }
    if (left > lo) {
      const double b = std::max(center - step, lo + 0.5 * h);
      const double z = try_z(Z, b);
      if (std::isnan(z)) left = lo;
      else if ((z < 0.0) != (zl < 0.0) || z == 0.0) return Bracket{b, left, z, zl};
      else left = b, zl = z;
      if (b <= lo + 0.5 * h) left = lo;
    }
  }
  return std::nullopt;
}

double refine(const Zfun& Z, const Bracket& br, double tol) {
  if (br.fa == 0.0) return br.a;
  if (br.fb == 0.0) return br.b;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      Z, br.a, br.b, br.fa, br.fb, [tol](double a, double b) { return std::abs(b - a) <= tol; }, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace

ReversalSolution find_reversal(const GaitParams& gait_raw, double beta_guess, const RobotParams& params,
                               const ReversalOptions& opts) {
  ReversalSolution out;
  ReversalResult& res = out.result;
  double beta = beta_guess;
  const int n = std::max(opts.scan_points, 2);

  for (int it = 1; it <= opts.max_iterations; ++it) {
    const GaitParams g = impose_hybrid_invariance(gait_raw, beta, params, opts.impact);
    const double lo = g.beta_r_plus;
    const double hi = beta_max(g, params);
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    const Zfun Z = [&](double b) { return z_function(g, b, params, opts.impact); };

    std::optional<Bracket> br;
    if (it > 1 && beta > lo && beta < hi) br = local_bracket(Z, beta, lo, hi, std::min(1e-6, (hi - lo) / (n + 1)));
    if (!br) {
      std::vector<Bracket> all = scan(Z, lo, hi, n);
      if (all.empty()) {
        res.multiplicity = Multiplicity::NoneFound;
        res.iterations = it;
        throw Error(ErrorCode::NoRoot,
                    "Z has no sign change in (" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
      }
      res.multiplicity = all.size() == 1 ? Multiplicity::Single : Multiplicity::Multiple;
      // the bracket nearest to the current guess
      br = *std::min_element(all.begin(), all.end(), [&](const Bracket& x, const Bracket& y) {
        return std::abs(0.5 * (x.a + x.b) - beta) < std::abs(0.5 * (y.a + y.b) - beta);
      });
    }
    const double root = refine(Z, *br, opts.root_tol);
    const double step = std::abs(root - beta);
    beta = root;
    res.history.push_back(beta);
    res.iterations = it;
    if (step <= opts.step_tol) {
      // Keep the gait this root was found on; its correction point is
      // within step_tol of the root.
      out.gait = g;
      out.gait.beta_r_minus = beta;
      res.beta_r_minus = beta;
      res.residual = std::abs(Z(beta));
      res.converged = true;
      return out;
    }
  }
  res.beta_r_minus = beta;
  throw Error(ErrorCode::NotConverged,
              "reversal iteration did not settle in " + std::to_string(opts.max_iterations) + " steps");
}

}  // namespace fhzd
