#pragma once

// Quantum Gaussian shift family N((Re tau) h, Sigma) on CCR(Im Sigma).
//
// Index convention: Sigma_ij = phi(X_j X_i), so the ordered product
// phi(W(xi_1) ... W(xi_T)) pairs xi_t (left) with xi_u (right) through
// xi_u^T Sigma xi_t.

#include <vector>

#include "qasym/linalg.hpp"

namespace qasym {

class GaussianShiftSpec {
 public:
  /// Validates Sigma PSD Hermitian, Re Sigma > 0 and tau = Sigma F.
  GaussianShiftSpec(CMatrix sigma, CMatrix tau, RMatrix f);
  /// tau = Sigma F
  static GaussianShiftSpec from_extension(CMatrix sigma, RMatrix f);
  /// Zero-shift spec (d = 0), for covariance-only questions.
  static GaussianShiftSpec covariance_only(CMatrix sigma);

  Eigen::Index r() const { return sigma_.rows(); }
  Eigen::Index d() const { return tau_.cols(); }
  const CMatrix& sigma() const { return sigma_; }
  const CMatrix& tau() const { return tau_; }
  const RMatrix& f() const { return f_; }
  RMatrix v() const { return sigma_.real(); }
  RMatrix s() const { return sigma_.imag(); }
  /// (Re tau) h
  RVector mean(const RVector& h) const;

 private:
  CMatrix sigma_;
  CMatrix tau_;
  RMatrix f_;
};

/// Checks Sigma PSD Hermitian (1e-10), Re Sigma min eigenvalue > 1e-10 and
/// Im Sigma real skew (1e-12). Throws ValidationError otherwise.
void validate_covariance(const CMatrix& sigma);

/// exp(i xi^T (Re tau) h - xi^T (Re Sigma) xi / 2)
cplx char_function(const GaussianShiftSpec& spec, const RVector& h, const RVector& xi);

/// phi_h(W(xi_1) ... W(xi_T)); equals char_function when T = 1.
cplx quasi_char_function(const GaussianShiftSpec& spec, const RVector& h, const std::vector<RVector>& xis);

struct Purity {
  double tr_rho_sq = 0.0;
  bool is_pure = false;
  double det_v = 0.0;
  double det_s = 0.0;
};

/// Tr rho^2 = sqrt(det S / det V) for N(0, Sigma); requires invertible S.
/// Throws ValidationError when S is singular (split the covariance first).
Purity purity(const CMatrix& sigma);

/// [[J, J#J^T], [J#J^T, J^T]]
CMatrix doubled_covariance(const CMatrix& j);

struct SplitForm {
  RMatrix transform;  // T with T^T Sigma T = Sigma_c (+) Sigma_q
  Eigen::Index r_c = 0;
  Eigen::Index r_q = 0;
  RMatrix sigma_c;
  CMatrix sigma_q;
  double condition_number = 0.0;  // of transform
  double residual = 0.0;          // max |T^T Sigma T - Sigma_c (+) Sigma_q|
};

/// Classical/quantum splitting: whiten by (Re Sigma)^{-1/2}, then bring the
/// skew part to real Schur normal form 0 (+) S_q with 2x2 blocks sorted by
/// magnitude (descending). Singular pairs below 1e-10 count as classical.
SplitForm split_classical_quantum(const CMatrix& sigma);

}  // namespace qasym
