#pragma once

// Finite-n diagnostics for the asymptotic statements: sandwich convergence,
// quasi-characteristic convergence (quantum CLT / Le Cam third lemma),
// asymptotic Weyl CCR, the q-LAN residual and the no-limiting-POVM example.
//
// n-site quantities that factorize over sites are evaluated per site and
// accumulated in the log domain, so n = 10^6 never forms a tensor product.
// Only qlan_residual materializes (small) tensor powers.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "qasym/gauss.hpp"
#include "qasym/linalg.hpp"
#include "qasym/model.hpp"

namespace qasym {

struct Site {
  CMatrix state;                     // sigma^(k)
  std::vector<CMatrix> observables;  // A_1^(k) .. A_r^(k), zero-mean under state
};

/// Per-site states and observables; X_i^(n) = n^{-1/2} sum_k A_i^(k) at site k.
class SiteFamily {
 public:
  using SiteFn = std::function<Site(std::size_t k)>;
  using ModelFn = std::function<ParametricModel(std::size_t k)>;

  /// Identical sites.
  static SiteFamily iid(Site site);
  /// Site k (1-based) from `sites`; `limit` is the k -> infinity site.
  static SiteFamily product(SiteFn sites, Site limit);

  /// Attach the parametric model behind the sites, needed for shifted states.
  /// `model(k)` gives the site-k model; `f` is the r x d matrix with
  /// L_i^(k) = sum_j F_ji A_j^(k).
  SiteFamily& bind_model(ModelFn model, RVector theta0, RMatrix f);

  Site site(std::size_t k) const;
  const Site& limit() const { return limit_; }
  bool identical() const { return identical_; }
  std::size_t r() const { return limit_.observables.size(); }
  Eigen::Index dim() const { return limit_.state.rows(); }

  /// Sigma_ij = Tr(sigma A_j A_i) at the limit site.
  CMatrix limit_sigma() const;
  bool has_model() const { return model_.has_value(); }
  const RVector& theta0() const { return theta0_; }
  const RMatrix& f() const { return f_; }
  ParametricModel site_model(std::size_t k) const;

 private:
  SiteFamily(SiteFn sites, Site limit, bool identical);

  SiteFn sites_;
  Site limit_;
  bool identical_ = true;
  std::optional<ModelFn> model_;
  RVector theta0_;
  RMatrix f_;
};

/// Throws ValidationError unless every observable is Hermitian, has the
/// site dimension and zero mean within 1e-10.
void validate_site(const Site& site);

/// prod_{k=1}^n z(k) accumulated as a sum of logarithms with the phase
/// unwrapped along the product. When `identical` is set only z(1) is evaluated
/// and raised to the n-th power in the log domain.
cplx factorized_product(const std::function<cplx(std::size_t)>& factor, std::size_t n, bool identical);

struct SandwichValue {
  cplx lhs;
  cplx rhs;
  double gap = 0.0;
};

/// lhs = prod_k Tr sqrt(sigma) e^{i xi.A/sqrt n} sqrt(sigma) e^{i eta.A/sqrt n};
/// rhs = exp(-1/2 (xi,eta)^T [[Sigma, Sigma#Sigma^T], [Sigma#Sigma^T, Sigma^T]] (xi,eta)).
SandwichValue sandwich_value(const SiteFamily& fam, const RVector& xi, const RVector& eta, std::size_t n);

struct QuasiCharValue {
  cplx finite_n;
  cplx limit;
  double gap = 0.0;
};

/// finite_n = prod_k Tr sigma^(k)_{theta0 + h/sqrt n} prod_t e^{i xi_t.A^(k)/sqrt n};
/// limit = quasi-characteristic function of N((Re tau) h, Sigma), tau = Sigma F.
QuasiCharValue quasi_char_finite_n(const SiteFamily& fam, const RVector& h, const std::vector<RVector>& xis,
                                   std::size_t n);

/// 2 - 2 Re{e^{i xi^T S eta} prod_k Tr sigma W(-eta) W(-xi) W(xi+eta)}, S = Im Sigma.
double weyl_residual(const SiteFamily& fam, const RVector& xi, const RVector& eta, std::size_t n);

struct QlanResidual {
  double residual = 0.0;         // || 2 log R - (h.Delta - h^T J h / 2) ||_{L2(rho^n)}
  double log_ratio_norm = 0.0;   // || 2 log R ||
  double score_norm = 0.0;       // || h.Delta - h^T J h / 2 ||
  double singular_mass = 0.0;    // Tr sigma_perp
  std::size_t total_dim = 0;
};

/// Materializes rho_theta0^{(x)n} and rho_{theta0+h/sqrt n}^{(x)n} (total
/// dimension at most 1024) and measures the q-LAN expansion error with the
/// base-model SLD Fisher information as the quadratic coefficient.
QlanResidual qlan_residual(const ParametricModel& m, const RVector& theta0, const RVector& h, std::size_t n);

inline constexpr std::size_t kQlanMaxDim = 1024;

struct PovmDemoRow {
  double h = 0.0;
  double finite_n_prob = 0.0;  // (Tr rho_{h/sqrt n} rho_0)^n
  double limit_prob = 0.0;     // exp(-h^2/4)
  double m_integral = 0.0;     // int sqrt(2) e^{-x^2/2} p_h(x) dx by Gauss-Hermite
  double m_gap = 0.0;          // |m_integral - limit_prob|
  double m_max = 0.0;          // max_x m(x) = sqrt(2)
};

/// Binary POVM {rho_0^{(x)n}, I - rho_0^{(x)n}} on the pure_1d model: the
/// limiting distribution exists but would need 0 <= m <= 1 with m = sqrt(2) e^{-x^2/2}.
std::vector<PovmDemoRow> no_limit_povm_demo(const std::vector<double>& h_values, std::size_t n,
                                            std::size_t hermite_order = 64);

}  // namespace qasym
