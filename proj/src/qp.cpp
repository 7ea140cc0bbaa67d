#include "fhzd/qp.hpp"

#include <algorithm>
#include <cmath>

namespace fhzd {

namespace {

double max_step(const VecX& v, const VecX& dv) {
  double a = 1.0;
  for (int i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

}  // namespace

QpResult solve_qp(const MatX& Q, const VecX& q, const MatX& G, const VecX& h, double tol, int max_iterations) {
  const int n = static_cast<int>(q.size()), m = static_cast<int>(h.size());
  if (Q.rows() != n || Q.cols() != n || G.rows() != m || G.cols() != n)
    throw Error(ErrorCode::InvalidParams, "qp dimensions disagree");

  VecX z = VecX::Zero(n);
  VecX s = (h - G * z).cwiseMax(1.0);
  VecX l = VecX::Ones(m);
  const double scale = 1.0 + std::max(q.lpNorm<Eigen::Infinity>(), h.lpNorm<Eigen::Infinity>());

  for (int it = 1; it <= max_iterations; ++it) {
    const VecX rd = Q * z + q + G.transpose() * l;
    const VecX rp = G * z + s - h;
    const double mu = s.dot(l) / m;
    if (rd.lpNorm<Eigen::Infinity>() <= tol * scale && rp.lpNorm<Eigen::Infinity>() <= tol * scale &&
        mu <= tol * scale)
      return {z, l, it};

    const VecX w = l.cwiseQuotient(s);
    const MatX K = Q + G.transpose() * w.asDiagonal() * G;
    const Eigen::LDLT<MatX> ldlt(K);

    // Mehrotra predictor-corrector.
    const auto direction = [&](const VecX& rc, VecX& dz, VecX& dl, VecX& ds) {
      dz = ldlt.solve(-rd - G.transpose() * (w.cwiseProduct(rp) - rc.cwiseQuotient(s)));
      dl = w.cwiseProduct(G * dz + rp) - rc.cwiseQuotient(s);
      ds = -(rc + s.cwiseProduct(dl)).cwiseQuotient(l);
    };
    VecX dz, dl, ds;
    direction(s.cwiseProduct(l), dz, dl, ds);
    const double aff = std::min(max_step(s, ds), max_step(l, dl));
    const double mu_aff = (s + aff * ds).dot(l + aff * dl) / m;
    const double sigma = std::pow(mu_aff / mu, 3);
    direction(s.cwiseProduct(l) + ds.cwiseProduct(dl) - VecX::Constant(m, sigma * mu), dz, dl, ds);

    const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(l, dl)));
    z += a * dz;
    s += a * ds;
    l += a * dl;
  }
  throw Error(ErrorCode::NotConverged, "qp interior point did not converge");
}

}  // namespace fhzd
