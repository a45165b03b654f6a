#pragma once

// Parametric quantum statistical models theta -> rho_theta, their
// derivatives, SLDs, SLD Fisher information and the square-root likelihood
// ratio of the quantum Lebesgue decomposition.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qasym/linalg.hpp"

namespace qasym {

/// Hermitian, PSD, unit-trace matrix. Construction validates.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix m, double tol = 1e-10);

  const CMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  CMatrix m_;
};

class ParametricModel {
 public:
  using StateFn = std::function<CMatrix(const RVector&)>;
  using DerivativeFn = std::function<CMatrix(const RVector&, std::size_t)>;
  using DomainFn = std::function<bool(const RVector&)>;

  ParametricModel(std::string name, std::size_t hilbert_dim, std::size_t param_dim, StateFn state, DomainFn domain,
                  std::optional<DerivativeFn> derivative = std::nullopt);

  const std::string& name() const { return name_; }
  std::size_t hilbert_dim() const { return hilbert_dim_; }
  std::size_t param_dim() const { return param_dim_; }
  bool in_domain(const RVector& theta) const;
  bool has_analytic_derivative() const { return derivative_.has_value(); }

  /// Raw state function; no validation.
  CMatrix raw_state(const RVector& theta) const { return state_(theta); }
  const std::optional<DerivativeFn>& analytic_derivative() const { return derivative_; }

  /// Same model with the analytic derivative dropped (forces finite differences).
  ParametricModel without_analytic_derivative() const;

 private:
  std::string name_;
  std::size_t hilbert_dim_;
  std::size_t param_dim_;
  StateFn state_;
  DomainFn domain_;
  std::optional<DerivativeFn> derivative_;
};

/// One-parameter pure model: rho_theta = (2/(e^t + e^-t)) e^{t sigma_x/2} rho_0 e^{t sigma_x/2}, rho_0 = |0><0|.
ParametricModel make_pure_1d();
/// rho = (I + t1 sigma_1 + t2 sigma_2 + sqrt(1 - t1^2 - t2^2) sigma_3)/2 on t1^2 + t2^2 < 1.
ParametricModel make_spin_coherent();
/// rho = (I + theta . sigma)/2 on the open unit ball.
ParametricModel make_bloch_ball();
/// theta -> rho0 + sum_i theta^i B_i; domain is "the result is a valid state".
ParametricModel make_affine(CMatrix rho0, std::vector<CMatrix> directions);

/// Non-identical product family k -> sigma_theta^(k) (sites are 1-based).
///
/// No tensor product is ever formed; consumers iterate over sites.
struct ProductModel {
  std::string name;
  std::size_t hilbert_dim = 0;
  std::size_t param_dim = 0;
  std::function<ParametricModel(std::size_t k)> site;
  ParametricModel limit;  // k -> infinity
};

/// Qubit product family with site-k Bloch vector
///   sum_{i<d} theta^i e_i + (1 + decay/k) * base.
/// The sites converge to the limit model with Bloch offset `base`.
ProductModel make_product_non_iid(const RVector& base, double decay, std::size_t param_dim = 1);

/// Validated rho_theta. Throws ValidationError outside the domain.
DensityMatrix state_at(const ParametricModel& m, const RVector& theta);

inline constexpr double kFiniteDifferenceStep = 1e-5;

/// d rho / d theta^i: analytic when available, otherwise a central difference
/// with step 1e-5 and one Richardson pass. Always Hermitian.
CMatrix derivative(const ParametricModel& m, const RVector& theta, std::size_t i);

/// Central difference derivative regardless of any analytic derivative.
CMatrix finite_difference_derivative(const ParametricModel& m, const RVector& theta, std::size_t i,
                                     double step = kFiniteDifferenceStep);

/// Minimal-norm solution of rho L + L rho = 2 D, computed in the eigenbasis of
/// rho; pairs with lambda_j + lambda_k below the cutoff are set to zero.
CMatrix solve_sld(const CMatrix& rho, const CMatrix& drho, std::optional<double> cutoff = std::nullopt);

/// SLDs L_1..L_d of the model at theta.
std::vector<CMatrix> sld(const ParametricModel& m, const RVector& theta);

/// J_ij = Re Tr(rho L_j L_i)
RMatrix fisher_from_slds(const CMatrix& rho, const std::vector<CMatrix>& slds);
RMatrix sld_fisher(const ParametricModel& m, const RVector& theta);

struct LebesgueDecomposition {
  CMatrix R;              // PSD square-root likelihood ratio
  CMatrix sigma_perp;     // PSD singular part with Tr(rho sigma_perp) = 0
  double clamped = 0.0;   // most negative eigenvalue of sigma_perp that was clamped to 0
  double residual = 0.0;  // max |sigma - R rho R - sigma_perp|
};

/// sigma = R rho R + sigma_perp.
///
/// On the support of rho, R = rho^{-1/2}(rho^{1/2} sigma rho^{1/2})^{1/2} rho^{-1/2}.
/// When sigma has weight coupling supp(rho) to ker(rho), R also carries the
/// off-diagonal blocks needed to keep sigma_perp positive (it reduces to the
/// support-only formula when that coupling vanishes).
/// Throws ConvergenceError if the reconstruction residual exceeds 1e-8.
LebesgueDecomposition sqrt_likelihood_ratio(const DensityMatrix& rho, const DensityMatrix& sigma,
                                            std::optional<double> cutoff = std::nullopt);

}  // namespace qasym
