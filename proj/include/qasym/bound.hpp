#pragma once

// The asymptotic representation bound
//   c_G = min_K { Tr(G Re Z) + ||sqrt(G) Im Z sqrt(G)||_1 },  Z = K^T Sigma K,  K^T Re tau = I,
// solved in the jointly convex form min Tr(G V) s.t. V >= K^T Sigma K, and the
// optimal limiting covariance V*.

#include <cstddef>

#include "qasym/linalg.hpp"
#include "qasym/model.hpp"

namespace qasym {

struct BarrierOptions {
  double mu0 = 1.0;
  double factor = 0.25;
  double tolerance = 1e-9;        // stop once mu * (d + r) is below this
  std::size_t max_newton = 5000;  // total Newton steps over all barrier stages
};

struct BoundResult {
  double value = 0.0;  // Tr(G Re Z*) + ||sqrt(G) Im Z* sqrt(G)||_1
  RMatrix k_star;      // r x d
  CMatrix z_star;      // K*^T Sigma K*
  RMatrix v_star;      // Re Z* + G^{-1/2} |G^{1/2} Im Z* G^{1/2}| G^{-1/2}
  std::size_t iterations = 0;
  double barrier_value = 0.0;  // Tr(G V) at the last barrier iterate
  double gap = 0.0;            // barrier_value - value
  double final_mu = 0.0;
};

/// Barrier/Newton solve over (V, B) with K = K_p + N B, where
/// K_p = Re tau ((Re tau)^T Re tau)^{-1} and N spans the null space of (Re tau)^T.
///
/// Throws ValidationError on bad shapes, rank(Re tau) < d or G not positive
/// definite; ConvergenceError if the Newton budget runs out.
BoundResult rep_bound(const CMatrix& sigma, const CMatrix& tau, const RMatrix& g, const BarrierOptions& opts = {});

/// The nonsmooth objective evaluated at a given K (no constraint check).
double rep_objective(const CMatrix& sigma, const RMatrix& k, const RMatrix& g);

/// V* for the result; certifies Tr(G V*) = value and V* >= Z* within 1e-8
/// (throws ConvergenceError otherwise).
RMatrix optimal_covariance(const BoundResult& res, const RMatrix& g);

/// SLDs -> D-extension -> rep_bound(Sigma, Sigma F, G).
BoundResult holevo_bound_iid(const ParametricModel& m, const RVector& theta0, const RMatrix& g,
                             const BarrierOptions& opts = {});

}  // namespace qasym
