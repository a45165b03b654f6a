#pragma once

// Holevo's commutation operator D_rho, D-invariance of observable spans and
// D-invariant extensions of the SLD span, with the Gaussian data
// (Sigma, A, tau, F) of the extension.
//
// Quotienting by the kernel of the L2(rho) seminorm is done by zeroing
// kernel x kernel blocks in the eigenbasis of rho.

#include <optional>
#include <utility>
#include <vector>

#include "qasym/asym.hpp"
#include "qasym/linalg.hpp"
#include "qasym/model.hpp"

namespace qasym {

inline constexpr double kInvarianceTolerance = 1e-8;

/// Minimal-norm Y with rho Y + Y rho = i (rho X - X rho):
/// Y_jk = i (l_j - l_k)/(l_j + l_k) X_jk in the eigenbasis of rho, zero on
/// pairs with l_j + l_k below the cutoff (default 1e-10 * l_max).
CMatrix commutation_apply(const DensityMatrix& rho, const CMatrix& x, std::optional<double> cutoff = std::nullopt);

/// <A, B>_rho = Re Tr rho (AB + BA)/2
double rho_inner(const CMatrix& rho, const CMatrix& a, const CMatrix& b);

/// Sigma_ij = Tr(rho X_j X_i)
CMatrix covariance_matrix(const CMatrix& rho, const std::vector<CMatrix>& xs);
/// A_ij = Tr(sqrt(rho) X_j sqrt(rho) X_i)
RMatrix sandwich_matrix(const CMatrix& rho, const std::vector<CMatrix>& xs);

struct InvarianceReport {
  bool invariant = false;
  std::vector<double> residuals;  // ||D X_i - proj D X_i|| / ||X_i||, L2(rho) norms
  double condition_i_gap = 0.0;   // max |A - Sigma#Sigma^T| / max(1, max |Sigma|)
  double gram_min_eigenvalue = 0.0;
};

/// Is span{X_i} closed under D_rho? Both the projection residuals and the
/// A = Sigma#Sigma^T criterion must be below `tol`.
/// Throws ValidationError when the L2(rho) Gram matrix has min eigenvalue <= 1e-10.
InvarianceReport check_d_invariance(const DensityMatrix& rho, const std::vector<CMatrix>& xs,
                                    double tol = kInvarianceTolerance);

struct DExtension {
  std::vector<CMatrix> x;  // X_1..X_r; the first d are the recentred SLDs
  RMatrix f;               // r x d, [I_d; 0]
  CMatrix sigma;           // Sigma_ij = Tr rho X_j X_i
  RMatrix a;               // A_ij = Tr sqrt(rho) X_j sqrt(rho) X_i
  CMatrix tau;             // Sigma F

  Eigen::Index r() const { return static_cast<Eigen::Index>(x.size()); }
  Eigen::Index d() const { return f.cols(); }
};

/// Greedy closure of span{L_i - Tr(rho L_i) I} under D_rho.
///
/// Appends L2(rho)-orthogonalized residuals of D X until nothing new appears.
/// Throws ConvergenceError if more than dim^2 - 1 elements would be needed or
/// the final span fails check_d_invariance.
DExtension build_d_extension(const DensityMatrix& rho, const std::vector<CMatrix>& slds,
                             double tol = kInvarianceTolerance);

/// Assemble (Sigma, A, tau) for a given basis and F.
DExtension make_extension(const DensityMatrix& rho, std::vector<CMatrix> xs, RMatrix f);

/// Max over the grid of |lhs - rhs| of the n-site sandwich condition for the
/// i.i.d. family (rho, X). Sigma must match Tr(rho X_j X_i) within 1e-8.
double verify_sandwich_condition(const DensityMatrix& rho, const std::vector<CMatrix>& xs, const CMatrix& sigma,
                            const std::vector<std::pair<RVector, RVector>>& grid, std::size_t n);

/// i.i.d. site family of the model at theta0 built on its D-extension.
SiteFamily iid_family(const ParametricModel& m, const RVector& theta0);
/// Product family: site k carries its own recentred SLDs followed by the
/// limit extension's extra elements recentred by their site-k mean.
SiteFamily product_family(const ProductModel& pm, const RVector& theta0);

}  // namespace qasym
