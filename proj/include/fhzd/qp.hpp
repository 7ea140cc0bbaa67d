#pragma once

#include "fhzd/types.hpp"

namespace fhzd {

struct QpResult {
  VecX z;
  VecX multipliers;  // one per row of G, >= 0
  int iterations = 0;
};

/// Dense convex QP  min 1/2 z'Qz + q'z  s.t.  G z <= h  by a primal-dual
/// interior point method. Q must be positive semidefinite and the problem
/// bounded. Throws NotConverged.
QpResult solve_qp(const MatX& Q, const VecX& q, const MatX& G, const VecX& h, double tol = 1e-10,
                  int max_iterations = 100);

}  // namespace fhzd
