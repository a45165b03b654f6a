#include "qasym/dext.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qasym/error.hpp"

namespace qasym {

namespace {

double default_cutoff(const HermEig& e) { return 1e-10 * std::max(e.values.maxCoeff(), 0.0); }

// Representative of X modulo K_rho: kernel x kernel block set to zero.
// Without this, residuals of pure states carry O(1) kernel parts whose
// rho-norm is rounding noise of size ~1e-8.
struct Quotient {
  explicit Quotient(const CMatrix& rho) : eig(herm_eig(rho)) {
    const double cut = default_cutoff(eig);
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
      if (eig.values(i) <= cut) ker.push_back(i);
  }
  CMatrix operator()(const CMatrix& x) const {
    if (ker.empty()) return x;
    CMatrix xe = eig.vectors.adjoint() * x * eig.vectors;
    for (const auto j : ker)
      for (const auto k : ker) xe(j, k) = 0.0;
    return hermitian_part(eig.vectors * xe * eig.vectors.adjoint());
  }
  HermEig eig;
  std::vector<Eigen::Index> ker;
};

RMatrix gram_matrix(const CMatrix& rho, const std::vector<CMatrix>& xs) {
  const auto r = static_cast<Eigen::Index>(xs.size());
  RMatrix g(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i; j < r; ++j) g(i, j) = g(j, i) = rho_inner(rho, xs[i], xs[j]);
  }
  return g;
}

CMatrix recentre(const CMatrix& rho, const CMatrix& x) {
  const cplx mean = (rho * x).trace();
  return hermitian_part(x - mean.real() * CMatrix::Identity(x.rows(), x.cols()));
}

}  // namespace

CMatrix commutation_apply(const DensityMatrix& rho, const CMatrix& x, std::optional<double> cutoff) {
  if (x.rows() != rho.dim() || x.cols() != rho.dim()) {
    throw ValidationError(fmt::format("commutation_apply: X is {}x{}, state dimension is {}", x.rows(), x.cols(), rho.dim()));
  }
  const HermEig e = herm_eig(rho.matrix());
  const double cut = cutoff.value_or(default_cutoff(e));
  CMatrix xe = e.vectors.adjoint() * x * e.vectors;
  const Eigen::Index n = xe.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double s = e.values(j) + e.values(k);
      xe(j, k) = s < cut ? cplx(0.0) : kI * ((e.values(j) - e.values(k)) / s) * xe(j, k);
    }
  }
  return hermitian_part(e.vectors * xe * e.vectors.adjoint());
}

double rho_inner(const CMatrix& rho, const CMatrix& a, const CMatrix& b) {
  return 0.5 * (rho * (a * b + b * a)).trace().real();
}

CMatrix covariance_matrix(const CMatrix& rho, const std::vector<CMatrix>& xs) {
  const auto r = static_cast<Eigen::Index>(xs.size());
  CMatrix sig(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) sig(i, j) = (rho * xs[j] * xs[i]).trace();
  }
  return hermitian_part(sig);
}

RMatrix sandwich_matrix(const CMatrix& rho, const std::vector<CMatrix>& xs) {
  const CMatrix root = matrix_function(rho, MatFn::Sqrt);
  const auto r = static_cast<Eigen::Index>(xs.size());
  RMatrix a(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) a(i, j) = (root * xs[j] * root * xs[i]).trace().real();
  }
  return 0.5 * (a + a.transpose());
}

InvarianceReport check_d_invariance(const DensityMatrix& rho, const std::vector<CMatrix>& xs, double tol) {
  if (xs.empty()) throw ValidationError("check_d_invariance: need at least one observable");
  const CMatrix& m = rho.matrix();
  for (const auto& x : xs) {
    if (x.rows() != rho.dim() || x.cols() != rho.dim()) throw ValidationError("check_d_invariance: dimension mismatch");
  }
  InvarianceReport rep;
  const RMatrix g = gram_matrix(m, xs);
  Eigen::SelfAdjointEigenSolver<RMatrix> ge(g);
  rep.gram_min_eigenvalue = ge.eigenvalues()(0);
  if (rep.gram_min_eigenvalue <= 1e-10) {
    throw ValidationError(fmt::format(
        "check_d_invariance: observables are linearly dependent modulo the kernel (Gram min eigenvalue {:.3e})",
        rep.gram_min_eigenvalue));
  }
  const Eigen::LDLT<RMatrix> solver(g);
  const Quotient quotient(m);
  const auto r = static_cast<Eigen::Index>(xs.size());
  bool ok = true;
  for (Eigen::Index i = 0; i < r; ++i) {
    const CMatrix y = commutation_apply(rho, xs[i]);
    RVector b(r);
    for (Eigen::Index j = 0; j < r; ++j) b(j) = rho_inner(m, xs[j], y);
    const RVector c = solver.solve(b);
    CMatrix res = y;
    for (Eigen::Index j = 0; j < r; ++j) res -= c(j) * xs[j];
    res = quotient(res);
    const double norm = std::sqrt(std::max(0.0, rho_inner(m, res, res)) / g(i, i));
    rep.residuals.push_back(norm);
    ok = ok && norm < tol;
  }
  const CMatrix sig = covariance_matrix(m, xs);
  const RMatrix a = sandwich_matrix(m, xs);
  rep.condition_i_gap = (a - geometric_mean_with_transpose(sig)).cwiseAbs().maxCoeff() / std::max(1.0, max_abs(sig));
  rep.invariant = ok && rep.condition_i_gap < tol;
  return rep;
}

DExtension make_extension(const DensityMatrix& rho, std::vector<CMatrix> xs, RMatrix f) {
  if (static_cast<std::size_t>(f.rows()) != xs.size()) {
    throw ValidationError(fmt::format("extension: F has {} rows for {} observables", f.rows(), xs.size()));
  }
  DExtension ext;
  ext.sigma = covariance_matrix(rho.matrix(), xs);
  ext.a = sandwich_matrix(rho.matrix(), xs);
  ext.tau = ext.sigma * f.cast<cplx>();
  ext.f = std::move(f);
  ext.x = std::move(xs);
  return ext;
}

DExtension build_d_extension(const DensityMatrix& rho, const std::vector<CMatrix>& slds, double tol) {
  if (slds.empty()) throw ValidationError("build_d_extension: need at least one SLD");
  const CMatrix& m = rho.matrix();
  const auto dim = static_cast<std::size_t>(rho.dim());
  const std::size_t cap = dim * dim - 1;

  std::vector<CMatrix> basis;
  for (const auto& l : slds) {
    if (l.rows() != rho.dim() || l.cols() != rho.dim()) throw ValidationError("build_d_extension: dimension mismatch");
    basis.push_back(recentre(m, l));
  }
  const auto d = static_cast<Eigen::Index>(basis.size());
  {
    const RMatrix g = gram_matrix(m, basis);
    Eigen::SelfAdjointEigenSolver<RMatrix> ge(g);
    if (ge.eigenvalues()(0) <= 1e-10) {
      throw ValidationError(
          fmt::format("build_d_extension: SLDs are linearly dependent (Gram min eigenvalue {:.3e})", ge.eigenvalues()(0)));
    }
  }

  const Quotient quotient(m);
  // L2(rho)-orthonormal copy of the span for projections.
  std::vector<CMatrix> ortho;
  auto project_out = [&](CMatrix y) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : ortho) y -= rho_inner(m, q, y) * q;
    }
    return y;
  };
  auto add_ortho = [&](const CMatrix& x) {
    const CMatrix y = project_out(x);
    const double norm = std::sqrt(std::max(0.0, rho_inner(m, y, y)));
    ortho.push_back(y / norm);
  };
  for (const auto& x : basis) add_ortho(x);

  for (std::size_t p = 0; p < basis.size(); ++p) {
    const double xnorm = std::sqrt(rho_inner(m, basis[p], basis[p]));
    const CMatrix res = quotient(project_out(commutation_apply(rho, basis[p])));
    const double rnorm = std::sqrt(std::max(0.0, rho_inner(m, res, res)));
    if (rnorm <= tol * xnorm) continue;
    if (basis.size() >= cap) {
      throw ConvergenceError(fmt::format("build_d_extension: closure needs more than {} elements", cap));
    }
    const CMatrix next = res / rnorm;
    basis.push_back(next);
    ortho.push_back(next);
  }

  const InvarianceReport rep = check_d_invariance(rho, basis, tol);
  if (!rep.invariant) {
    const double worst = *std::max_element(rep.residuals.begin(), rep.residuals.end());
    throw ConvergenceError(fmt::format("build_d_extension: closed span fails the invariance check (residual {:.3e}, A gap {:.3e})",
                                       worst, rep.condition_i_gap));
  }
  RMatrix f = RMatrix::Zero(static_cast<Eigen::Index>(basis.size()), d);
  f.topRows(d).setIdentity();
  return make_extension(rho, std::move(basis), std::move(f));
}

double verify_sandwich_condition(const DensityMatrix& rho, const std::vector<CMatrix>& xs, const CMatrix& sigma,
                            const std::vector<std::pair<RVector, RVector>>& grid, std::size_t n) {
  const CMatrix expected = covariance_matrix(rho.matrix(), xs);
  if (sigma.rows() != expected.rows() || sigma.cols() != expected.cols() ||
      (sigma - expected).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, max_abs(expected))) {
    throw ValidationError("verify_sandwich_condition: Sigma does not match Tr(rho X_j X_i)");
  }
  const SiteFamily fam = SiteFamily::iid(Site{rho.matrix(), xs});
  double worst = 0.0;
  for (const auto& [xi, eta] : grid) worst = std::max(worst, sandwich_value(fam, xi, eta, n).gap);
  return worst;
}

SiteFamily iid_family(const ParametricModel& m, const RVector& theta0) {
  const DensityMatrix rho = state_at(m, theta0);
  DExtension ext = build_d_extension(rho, sld(m, theta0));
  SiteFamily fam = SiteFamily::iid(Site{rho.matrix(), ext.x});
  fam.bind_model([m](std::size_t) { return m; }, theta0, ext.f);
  return fam;
}

SiteFamily product_family(const ProductModel& pm, const RVector& theta0) {
  const DensityMatrix rho_inf = state_at(pm.limit, theta0);
  const DExtension ext = build_d_extension(rho_inf, sld(pm.limit, theta0));
  const auto d = static_cast<std::size_t>(ext.d());
  const std::vector<CMatrix> extra(ext.x.begin() + static_cast<std::ptrdiff_t>(d), ext.x.end());
  auto sites = [pm, theta0, extra](std::size_t k) {
    const ParametricModel model = pm.site(k);
    const DensityMatrix rho = state_at(model, theta0);
    Site s{rho.matrix(), {}};
    for (const auto& l : sld(model, theta0)) s.observables.push_back(recentre(rho.matrix(), l));
    for (const auto& x : extra) s.observables.push_back(recentre(rho.matrix(), x));
    return s;
  };
  SiteFamily fam = SiteFamily::product(sites, Site{rho_inf.matrix(), ext.x});
  fam.bind_model(pm.site, theta0, ext.f);
  return fam;
}

}  // namespace qasym
