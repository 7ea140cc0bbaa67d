#include "fhzd/gait.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fhzd {

std::string_view to_string(Phase phase) { return phase == Phase::Rising ? "rising" : "falling"; }

namespace {

constexpr double kMinInterval = 1e-9;

// Bernstein polynomials of degree n at s, written into b[0..n].
void bernstein(int n, double s, double* b) {
  b[0] = 1.0;
  const double t = 1.0 - s;
  for (int k = 1; k <= n; ++k) {
    double saved = 0.0;
    for (int i = 0; i < k; ++i) {
      const double tmp = b[i];
      b[i] = saved + t * tmp;
      saved = s * tmp;
    }
    b[k] = saved;
  }
}

BezierValue eval(const BezierRow& c, double s) {
  const int n = static_cast<int>(c.cols()) - 1;
  double b[kMaxBezierDegree + 1];
  BezierValue v;
  bernstein(n, s, b);
  for (int i = 0; i <= n; ++i) v.value += c[i] * b[i];
  if (n >= 1) {
    bernstein(n - 1, s, b);
    for (int i = 0; i < n; ++i) v.d1 += (c[i + 1] - c[i]) * b[i];
    v.d1 *= n;
  }
  if (n >= 2) {
    bernstein(n - 2, s, b);
    for (int i = 0; i < n - 1; ++i) v.d2 += (c[i + 2] - 2.0 * c[i + 1] + c[i]) * b[i];
    v.d2 *= n * (n - 1);
  }
  return v;
}

void check_degree(int n) {
  if (n < 3) throw Error(ErrorCode::DegreeTooLow, "Bezier degree " + std::to_string(n) + " < 3");
  if (n > kMaxBezierDegree)
    throw Error(ErrorCode::InvalidParams, "Bezier degree " + std::to_string(n) + " exceeds the supported maximum");
}

double interval(const GaitParams& g, Phase ph) {
  const double d = g.beta_end(ph) - g.beta_start(ph);
  if (!(std::abs(d) >= kMinInterval))
    throw Error(ErrorCode::PhaseIntervalDegenerate, std::string(to_string(ph)) + " phase has zero width");
  return d;
}

}  // namespace

BezierValue bezier_eval(const BezierRow& coeffs, double s) {
  check_degree(static_cast<int>(coeffs.cols()) - 1);
  const double sc = std::clamp(s, 0.0, 1.0);
  BezierValue v = eval(coeffs, sc);
  v.clamped = sc != s;
  return v;
}

BezierValue bezier_eval_extended(const BezierRow& coeffs, double s) {
  check_degree(static_cast<int>(coeffs.cols()) - 1);
  return eval(coeffs, s);
}

void GaitParams::validate() const {
  check_degree(degree());
  check_degree(fri_degree());
  if (b_f.cols() != b_r.cols() || bfri_f.cols() != bfri_r.cols())
    throw Error(ErrorCode::InvalidParams, "rising and falling matrices must share their degree");
  if (!b_r.allFinite() || !b_f.allFinite() || !bfri_r.allFinite() || !bfri_f.allFinite())
    throw Error(ErrorCode::InvalidParams, "non-finite Bezier coefficient");
  if (!std::isfinite(beta_r_plus) || !std::isfinite(beta_r_minus) || !std::isfinite(beta_f_minus))
    throw Error(ErrorCode::InvalidParams, "non-finite phase boundary");
  interval(*this, Phase::Rising);
  interval(*this, Phase::Falling);
  if (!(beta_r_plus < beta_r_minus)) throw Error(ErrorCode::InvalidParams, "rising phase must increase beta");
  if (!(beta_f_minus < beta_r_minus)) throw Error(ErrorCode::InvalidParams, "falling phase must decrease beta");
  if (!(beta_r_minus < 0.0)) throw Error(ErrorCode::InvalidParams, "beta must stay negative");
}

namespace {

// Second-order Taylor continuation from the nearest end outside [0, 1].
BezierValue continued(const BezierRow& coeffs, double s) {
  const double e = std::clamp(s, 0.0, 1.0);
  BezierValue v = bezier_eval(coeffs, e);
  const double u = s - e;
  v.value += u * (v.d1 + 0.5 * u * v.d2);
  v.d1 += u * v.d2;
  v.clamped = false;
  return v;
}

}  // namespace

DesiredOutputs desired_outputs(const GaitParams& gait, Phase phase, double beta) {
  const double d = interval(gait, phase);
  const double s = (beta - gait.beta_start(phase)) / d;
  const BezierRows& b = gait.joints(phase);
  DesiredOutputs out;
  out.s = s;
  out.outside = s < 0.0 || s > 1.0;
  for (int r = 0; r < 3; ++r) {
    const BezierValue v = continued(b.row(r), s);
    out.h[r] = v.value;
    out.dh[r] = v.d1 / d;
    out.ddh[r] = v.d2 / (d * d);
  }
  const BezierValue f = continued(gait.fri(phase), s);
  out.fri = f.value;
  out.dfri = f.d1 / d;
  out.ddfri = f.d2 / (d * d);
  return out;
}

FullState manifold_state(const GaitParams& gait, Phase phase, double beta, double dbeta) {
  const DesiredOutputs o = desired_outputs(gait, phase, beta);
  FullState x;
  x.q << beta, o.h;
  x.dq << 1.0, o.dh;
  x.dq *= dbeta;
  return x;
}

std::pair<Vec3, Vec3> output_error(const GaitParams& gait, Phase phase, const FullState& x) {
  const DesiredOutputs o = desired_outputs(gait, phase, x.q[0]);
  return {x.qb() - o.h, x.dq.tail<3>() - o.dh * x.dq[0]};
}

void set_landing_pose(GaitParams& gait, double beta_f_minus, double q2, const RobotParams& params) {
  gait.beta_f_minus = beta_f_minus;
  gait.b_f.col(gait.b_f.cols() - 1) = flat_foot_configuration(beta_f_minus, q2, params).tail<3>();
}

GaitParams impose_hybrid_invariance(const GaitParams& gait, double beta_r_minus, const RobotParams& params,
                                    const ImpactOptions& opts) {
  GaitParams g = gait;
  const int M = g.degree();
  check_degree(M);
  check_degree(g.fri_degree());
  g.beta_r_minus = beta_r_minus;

  const double df = g.beta_f_minus - g.beta_r_minus;
  if (!(std::abs(df) >= kMinInterval))
    throw Error(ErrorCode::PhaseIntervalDegenerate, "falling phase has zero width");

  // Impact side first: it fixes beta_r_plus, on which the rising slope depends.
  const FullState pre = manifold_state(g, Phase::Falling, g.beta_f_minus, -1.0);
  const ImpactResult imp = impact_map(pre, params, opts);
  const double dq1 = imp.post.dq[0];
  if (!(std::abs(dq1) > 1e-9 * imp.post.dq.norm()) || !std::isfinite(dq1))
    throw Error(ErrorCode::SingularRelabeling, "post-impact stance ankle velocity vanishes");
  g.beta_r_plus = imp.post.q[0];
  const double dr_new = g.beta_r_minus - g.beta_r_plus;
  if (!(std::abs(dr_new) >= kMinInterval))
    throw Error(ErrorCode::PhaseIntervalDegenerate, "rising phase has zero width");
  g.b_r.col(0) = imp.post.qb();
  g.b_r.col(1) = g.b_r.col(0) + dr_new / M * imp.post.dq.tail<3>() / dq1;

  // Falling phase starts where rising ends: position and slope continuity.
  const Vec3 slope_r = M * (g.b_r.col(M) - g.b_r.col(M - 1)) / dr_new;
  g.b_f.col(0) = g.b_r.col(M);
  g.b_f.col(1) = g.b_f.col(0) + df / M * slope_r;
  g.bfri_f[0] = g.bfri_r[g.fri_degree()];
  return g;
}

void to_json(nlohmann::json& j, const GaitParams& g) {
  auto rows = [](const BezierRows& m) {
    nlohmann::json a = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
      std::vector<double> v(m.cols());
      for (int c = 0; c < m.cols(); ++c) v[c] = m(r, c);
      a.push_back(v);
    }
    return a;
  };
  auto row = [](const BezierRow& m) { return std::vector<double>(m.data(), m.data() + m.cols()); };
  j = nlohmann::json{{"b_r", rows(g.b_r)},
                     {"b_f", rows(g.b_f)},
                     {"bfri_r", row(g.bfri_r)},
                     {"bfri_f", row(g.bfri_f)},
                     {"beta_r_plus", g.beta_r_plus},
                     {"beta_r_minus", g.beta_r_minus},
                     {"beta_f_minus", g.beta_f_minus}};
}

void from_json(const nlohmann::json& j, GaitParams& g) {
  auto rows = [](const nlohmann::json& a, const char* name) {
    const auto v = a.get<std::vector<std::vector<double>>>();
    if (v.size() != 3) throw Error(ErrorCode::InvalidParams, std::string(name) + " must have 3 rows");
    const std::size_t n = v[0].size();
    if (n < 1 || n > kMaxBezierDegree + 1) throw Error(ErrorCode::InvalidParams, std::string(name) + " has a bad width");
    BezierRows m(3, n);
    for (int r = 0; r < 3; ++r) {
      if (v[r].size() != n) throw Error(ErrorCode::InvalidParams, std::string(name) + " rows differ in length");
      for (std::size_t c = 0; c < n; ++c) m(r, c) = v[r][c];
    }
    return m;
  };
  auto row = [](const nlohmann::json& a, const char* name) {
    const auto v = a.get<std::vector<double>>();
    if (v.empty() || v.size() > kMaxBezierDegree + 1)
      throw Error(ErrorCode::InvalidParams, std::string(name) + " has a bad width");
    BezierRow m(1, v.size());
    for (std::size_t c = 0; c < v.size(); ++c) m[c] = v[c];
    return m;
  };
  GaitParams out;
  out.b_r = rows(j.at("b_r"), "b_r");
  out.b_f = rows(j.at("b_f"), "b_f");
  out.bfri_r = row(j.at("bfri_r"), "bfri_r");
  out.bfri_f = row(j.at("bfri_f"), "bfri_f");
  out.beta_r_plus = j.at("beta_r_plus").get<double>();
  out.beta_r_minus = j.at("beta_r_minus").get<double>();
  out.beta_f_minus = j.at("beta_f_minus").get<double>();
  out.validate();
  g = out;
}

GaitParams load_gait(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open gait file " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j.get<GaitParams>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, path + ": " + e.what());
  }
}

}  // namespace fhzd
