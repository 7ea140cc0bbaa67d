#include "fhzd/zero_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fhzd {

namespace {

struct Reduced {
  double inertia;  // ankle momentum per unit dbeta
  double dy_cm;    // dy_cm / dbeta
  double x_cm;
  DesiredOutputs out;
};

Reduced reduce(double beta, Phase phase, const GaitParams& gait, const RobotParams& params) {
  Reduced r;
  r.out = desired_outputs(gait, phase, beta);
  Vec4 q, c;
  q << beta, r.out.h;
  c << 1.0, r.out.dh;
  const Kinematics kin = kinematics(q, params);
  double w = 0.0;
  r.inertia = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& l = params.links[i];
    w += c[i];
    r.inertia += l.inertia * w + l.mass * cross2(kin.link_com[i].p, kin.link_com[i].jac * c);
  }
  r.dy_cm = kin.com.jac.row(1).dot(c);
  r.x_cm = kin.com.p.x();
  return r;
}

Kappas assemble(const Reduced& r, const RobotParams& params) {
  const double m = params.total_mass();
  Kappas k;
  k.inertia = r.inertia;
  k.inertia_fri = r.inertia - m * r.out.fri * r.dy_cm;
  k.x_cm = r.x_cm;
  k.fri = r.out.fri;
  k.k1 = 1.0 / k.inertia_fri;
  k.k2 = -m * params.g0 * (r.x_cm - r.out.fri);
  k.k3 = -m * r.out.dfri * r.dy_cm * k.k1 * k.k1;
  return k;
}

// Chebyshev series on t in [-1, 1] sampled at the n+1 extreme points
// t_k = cos(pi k / n).
std::vector<double> cheb_fit(const std::vector<double>& f) {
  const int n = static_cast<int>(f.size()) - 1;
  std::vector<double> a(n + 1, 0.0);
  for (int j = 0; j <= n; ++j) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      s += w * f[k] * std::cos(std::numbers::pi * j * k / n);
    }
    a[j] = 2.0 * s / n;
  }
  a[0] *= 0.5;
  a[n] *= 0.5;
  return a;
}

double cheb_eval(const std::vector<double>& a, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (int j = static_cast<int>(a.size()) - 1; j >= 1; --j) {
    const double b0 = 2.0 * t * b1 - b2 + a[j];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + a[0];
}

// Antiderivative vanishing at t = -1, scaled by dx/dt.
std::vector<double> cheb_integrate(const std::vector<double>& a, double scale) {
  const int n = static_cast<int>(a.size());
  std::vector<double> b(n + 1, 0.0);
  auto at = [&](int j) { return j < n ? a[j] : 0.0; };
  for (int j = 1; j <= n; ++j) {
    const double prev = (j == 1) ? 2.0 * a[0] : at(j - 1);
    b[j] = scale * (prev - at(j + 1)) / (2.0 * j);
  }
  double s = 0.0;
  for (int j = 1; j <= n; ++j) s += (j % 2 ? -1.0 : 1.0) * b[j];
  b[0] = -s;
  return b;
}

double tail(const std::vector<double>& a) {
  const std::size_t n = a.size();
  return std::max({std::abs(a[n - 1]), std::abs(a[n - 2]), std::abs(a[n - 3])});
}

double magnitude(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

Kappas kappas(double beta, Phase phase, const GaitParams& gait, const RobotParams& params, bool check_decoupling) {
  const Reduced r = reduce(beta, phase, gait, params);
  if (check_decoupling) {
    const FullState x = manifold_state(gait, phase, beta, 1.0);
    const double c = condition_number(decoupling_matrix(x, gait, phase, params));
    if (!(c <= 1e12)) throw Error(ErrorCode::DecouplingSingular, "decoupling matrix condition " + std::to_string(c));
  }
  return assemble(r, params);
}

PhaseSolution::PhaseSolution(Phase phase, const GaitParams& gait, const RobotParams& params, double tol)
    : phase_(phase), b0_(gait.beta_start(phase)), b1_(gait.beta_end(phase)) {
  const double half = 0.5 * (b1_ - b0_);
  const double mid = 0.5 * (b0_ + b1_);
  if (!(std::abs(half) > 0.0)) throw Error(ErrorCode::PhaseIntervalDegenerate, "empty phase");

  for (int n = 32; n <= 512; n *= 2) {
    std::vector<double> ka(n + 1), kb(n + 1), t(n + 1);
    double k_ref = 0.0;
    for (int k = 0; k <= n; ++k) {
      t[k] = std::cos(std::numbers::pi * k / n);
      const Kappas kap = assemble(reduce(mid + half * t[k], phase, gait, params), params);
      const double K = kap.inertia_fri;
      if (k == 0) k_ref = K;
      if (!std::isfinite(K) || K * k_ref <= 0.0 || std::abs(K) < 1e-9 * std::abs(kap.inertia))
        throw Error(ErrorCode::QuadratureFailure,
                    std::string(to_string(phase)) + " phase: dbeta/dsigma_fri singular inside the interval");
      ka[k] = kap.k3 * K;  // k3 / k1
      kb[k] = kap.k2 * K;  // k2 / k1
    }
    const std::vector<double> ca = cheb_fit(ka);
    const std::vector<double> cb = cheb_fit(kb);
    std::vector<double> lnd = cheb_integrate(ca, half);

    std::vector<double> g(n + 1);
    for (int k = 0; k <= n; ++k) g[k] = std::exp(-2.0 * cheb_eval(lnd, t[k])) * kb[k];
    const std::vector<double> cg = cheb_fit(g);

    auto resolved = [&](const std::vector<double>& c) {
      const double e = tail(c);
      return e * std::abs(half) <= 0.1 * tol || e <= 1e-14 * magnitude(c);
    };
    error_ = std::abs(half) * std::max({tail(ca), tail(cb), tail(cg)});
    if (resolved(ca) && resolved(cb) && resolved(cg)) {
      log_delta_ = std::move(lnd);
      w_ = cheb_integrate(cg, half);
      return;
    }
  }
  throw Error(ErrorCode::QuadratureFailure,
              std::string(to_string(phase)) + " phase: Chebyshev series did not resolve the integrand");
}

double PhaseSolution::to_t(double beta) const { return (2.0 * beta - b0_ - b1_) / (b1_ - b0_); }

double PhaseSolution::delta(double beta) const { return std::exp(cheb_eval(log_delta_, to_t(beta))); }

double PhaseSolution::potential(double beta) const {
  const double t = to_t(beta);
  return -std::exp(2.0 * cheb_eval(log_delta_, t)) * cheb_eval(w_, t);
}

std::pair<double, double> PhaseSolution::min_zeta(double zeta_plus, int samples) const {
  double best = zeta_plus, where = b0_;
  for (int i = 1; i <= samples; ++i) {
    const double b = b0_ + (b1_ - b0_) * i / samples;
    const double z = zeta(b, zeta_plus);
    if (z < best) {
      best = z;
      where = b;
    }
  }
  return {best, where};
}

double ankle_fri_transfer(double beta, Phase phase, const GaitParams& gait, const RobotParams& params) {
  const Kappas k = assemble(reduce(beta, phase, gait, params), params);
  if (!(std::abs(k.inertia) > 1e-12 * std::max(1.0, std::abs(k.inertia_fri))))
    throw Error(ErrorCode::TransferSingular, "ankle momentum vanishes on the constraint surface");
  return k.inertia_fri / k.inertia;
}

double impact_momentum_ratio(const GaitParams& gait, const RobotParams& params, const ImpactOptions& opts) {
  const FullState pre = manifold_state(gait, Phase::Falling, gait.beta_f_minus, -1.0);
  const ImpactResult imp = impact_map(pre, params, opts);
  return imp.sigma_post / imp.sigma_pre;
}

}  // namespace fhzd
