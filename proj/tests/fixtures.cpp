#include "fixtures.hpp"

#include <cmath>

namespace fixture {

using qasym::cplx;

namespace {

CMatrix recentre(const CMatrix& rho, const CMatrix& x) {
  return x - (rho * x).trace().real() * CMatrix::Identity(x.rows(), x.cols());
}

CMatrix traceless(const CMatrix& h) { return h - h.trace() / static_cast<double>(h.rows()) * CMatrix::Identity(h.rows(), h.cols()); }

RMatrix random_invertible(Rng& rng, Eigen::Index m) {
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  RMatrix q = oracle::random_orthogonal(rng, m);
  for (Eigen::Index k = 0; k < m; ++k) q.col(k) *= scale(rng);
  return q * oracle::random_orthogonal(rng, m);
}

}  // namespace

ParametricModel random_affine_model(Rng& rng, Eigen::Index dim, std::size_t d) {
  const CMatrix rho0 = oracle::random_faithful_state(rng, dim);
  std::vector<CMatrix> dirs;
  for (std::size_t i = 0; i < d; ++i) dirs.push_back(0.05 * traceless(oracle::random_hermitian(rng, dim)));
  return qasym::make_affine(rho0, dirs);
}

DExtension rotated_extension(const qasym::DensityMatrix& rho, const DExtension& ext, Rng& rng) {
  const auto d = static_cast<std::size_t>(ext.d());
  const std::size_t r = ext.x.size();
  std::vector<CMatrix> xs(ext.x.begin(), ext.x.begin() + static_cast<std::ptrdiff_t>(d));
  const auto m = static_cast<Eigen::Index>(r - d);
  if (m > 0) {
    const RMatrix q = random_invertible(rng, m);
    std::normal_distribution<double> n01;
    for (Eigen::Index a = 0; a < m; ++a) {
      CMatrix y = CMatrix::Zero(rho.dim(), rho.dim());
      for (Eigen::Index b = 0; b < m; ++b) y += q(a, b) * ext.x[d + static_cast<std::size_t>(b)];
      for (std::size_t k = 0; k < d; ++k) y += 0.3 * n01(rng) * ext.x[k];
      xs.push_back(y);
    }
  }
  return qasym::make_extension(rho, xs, ext.f);
}

DExtension padded_extension(const qasym::DensityMatrix& rho, const DExtension& ext, Rng& rng) {
  const CMatrix& r = rho.matrix();
  const Eigen::Index dim = rho.dim();
  // generalized Gell-Mann basis, recentred
  std::vector<CMatrix> candidates;
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = j + 1; k < dim; ++k) {
      CMatrix s = CMatrix::Zero(dim, dim);
      s(j, k) = s(k, j) = 1.0;
      candidates.push_back(s);
      CMatrix a = CMatrix::Zero(dim, dim);
      a(j, k) = cplx(0, -1);
      a(k, j) = cplx(0, 1);
      candidates.push_back(a);
    }
  for (Eigen::Index j = 0; j + 1 < dim; ++j) {
    CMatrix z = CMatrix::Zero(dim, dim);
    z(j, j) = 1.0;
    z(j + 1, j + 1) = -1.0;
    candidates.push_back(z);
  }
  std::vector<CMatrix> basis;  // orthonormal copy for the projections
  for (const auto& x : ext.x) {
    CMatrix y = x;
    for (const auto& b : basis) y -= qasym::rho_inner(r, b, y) * b;
    basis.push_back(y / std::sqrt(qasym::rho_inner(r, y, y)));
  }
  std::vector<CMatrix> extra;
  for (const auto& c : candidates) {
    CMatrix y = recentre(r, c);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) y -= qasym::rho_inner(r, b, y) * b;
    const double nrm = std::sqrt(std::max(qasym::rho_inner(r, y, y), 0.0));
    if (nrm < 1e-6) continue;
    basis.push_back(y / nrm);
    extra.push_back(recentre(r, c));
  }
  std::vector<CMatrix> xs = ext.x;
  xs.insert(xs.end(), extra.begin(), extra.end());
  RMatrix f = RMatrix::Zero(static_cast<Eigen::Index>(xs.size()), ext.d());
  f.topRows(ext.f.rows()) = ext.f;
  return rotated_extension(rho, qasym::make_extension(rho, xs, f), rng);
}

SpanDraw random_span(Rng& rng, bool close) {
  std::uniform_int_distribution<int> coin(0, 5);
  const Eigen::Index dim = coin(rng) < 3 ? 2 : 3;
  const int kind = coin(rng);
  SpanDraw out;
  out.rho = kind == 0 ? oracle::random_state(rng, dim, 1) : oracle::random_faithful_state(rng, dim);
  const int k = 1 + coin(rng) % (dim == 2 ? 2 : 3);
  // Redraw nearly dependent lists: Sigma#Sigma^T goes through (Re Sigma)^{-1/2},
  // so a Gram condition number c costs ~c^2 eps of accuracy.
  for (;;) {
    out.xs.clear();
    for (int i = 0; i < k; ++i) {
      CMatrix x = recentre(out.rho, oracle::random_hermitian(rng, dim));
      x /= std::sqrt(qasym::rho_inner(out.rho, x, x));
      out.xs.push_back(x);
    }
    RMatrix g(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) g(i, j) = qasym::rho_inner(out.rho, out.xs[static_cast<std::size_t>(i)], out.xs[static_cast<std::size_t>(j)]);
    if (Eigen::SelfAdjointEigenSolver<RMatrix>(g).eigenvalues()(0) > 1e-2) break;
  }
  if (close) {
    const qasym::DExtension ext = qasym::build_d_extension(qasym::DensityMatrix(out.rho), out.xs);
    out.xs = ext.x;
  }
  return out;
}

}  // namespace fixture
