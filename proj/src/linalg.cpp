#include "qasym/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "qasym/error.hpp"

namespace qasym {

namespace {

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw ValidationError(fmt::format("{}: expected a square matrix, got {}x{}", what, m.rows(), m.cols()));
  }
}

double scale_of(const CMatrix& m) { return std::max(1.0, max_abs(m)); }

// A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2} for A positive definite.
CMatrix geometric_mean_direct(const HermEig& ea, const CMatrix& b) {
  const CMatrix a_half = spectral_apply(ea, [](double x) { return std::sqrt(std::max(x, 0.0)); });
  const CMatrix a_inv_half = spectral_apply(ea, [](double x) { return 1.0 / std::sqrt(x); });
  const CMatrix inner = hermitian_part(a_inv_half * b * a_inv_half);
  const HermEig ei = herm_eig(inner, 1e-8);
  const CMatrix inner_sqrt = spectral_apply(ei, [](double x) { return std::sqrt(std::max(x, 0.0)); });
  return hermitian_part(a_half * inner_sqrt * a_half);
}

}  // namespace

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double max_asymmetry(const CMatrix& h) {
  if (h.rows() != h.cols()) return INFINITY;
  return h.size() == 0 ? 0.0 : (h - h.adjoint()).cwiseAbs().maxCoeff();
}

bool approx_equal(const CMatrix& a, const CMatrix& b, double atol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || (a - b).cwiseAbs().maxCoeff() <= atol;
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

CMatrix pauli(int index) {
  CMatrix p(2, 2);
  switch (index) {
    case 0: p << 1, 0, 0, 1; break;
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, -kI, kI, 0; break;
    case 3: p << 1, 0, 0, -1; break;
    default: throw ValidationError(fmt::format("pauli: index {} not in 0..3", index));
  }
  return p;
}

namespace {

bool is_exactly_diagonal(const CMatrix& h) {
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      if (i != j && h(i, j) != cplx(0.0, 0.0)) return false;
  return true;
}

}  // namespace

HermEig herm_eig(const CMatrix& h, double tol) {
  require_square(h, "herm_eig");
  const double asym = max_asymmetry(h);
  if (asym > tol * scale_of(h)) {
    throw ValidationError(fmt::format("herm_eig: matrix is not Hermitian (max asymmetry {:.3e})", asym));
  }
  if (h.size() == 0) return {RVector(0), CMatrix(0, 0)};
  if (is_exactly_diagonal(h)) {
    // exact spectrum: sort the real diagonal and permute the unit vectors
    const Eigen::Index n = h.rows();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return h(a, a).real() < h(b, b).real(); });
    HermEig out{RVector(n), CMatrix::Zero(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index i = idx[static_cast<std::size_t>(k)];
      out.values(k) = h(i, i).real();
      out.vectors(i, k) = 1.0;
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(h));
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("herm_eig: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix matrix_function(const CMatrix& h, MatFn f, const FnOptions& opts) {
  const HermEig eig = herm_eig(h);
  const Eigen::Index n = eig.values.size();
  if (n == 0) return h;
  const double lmax = eig.values.cwiseAbs().maxCoeff();
  const double neg_tol = 1e-12 * std::max(1.0, lmax);
  const bool needs_psd = f == MatFn::Sqrt || f == MatFn::Log || f == MatFn::InvSqrt;
  if (needs_psd && eig.values(0) < -neg_tol) {
    throw ValidationError(fmt::format("matrix_function: negative eigenvalue {:.6e} for a PSD-only function",
                                      eig.values(0)));
  }
  const double cutoff = opts.cutoff.value_or(1e-10 * std::max(eig.values(n - 1), 0.0));
  // Square roots of eigenvalues that are zero up to rounding are taken as 0.
  // A diagonal input has an exact spectrum, so tiny entries are kept.
  const double sqrt_floor =
      is_exactly_diagonal(h) ? 0.0 : 64.0 * std::numeric_limits<double>::epsilon() * std::max(lmax, 0.0);

  CVector fv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = eig.values(i);
    switch (f) {
      case MatFn::Sqrt: fv(i) = x <= sqrt_floor ? 0.0 : std::sqrt(x); break;
      case MatFn::Exp: fv(i) = std::exp(x); break;
      case MatFn::Abs: fv(i) = std::abs(x); break;
      case MatFn::Log:
      case MatFn::InvSqrt:
        if (x <= cutoff) {
          if (opts.kernel == KernelPolicy::Reject) {
            throw ValidationError(fmt::format(
                "matrix_function: eigenvalue {:.6e} is below the kernel cutoff {:.3e} and no kernel policy was given",
                x, cutoff));
          }
          fv(i) = 0.0;
        } else {
          fv(i) = f == MatFn::Log ? std::log(x) : 1.0 / std::sqrt(x);
        }
        break;
    }
  }
  return eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
}

CMatrix unitary_exp(const CMatrix& h, double t) {
  const HermEig eig = herm_eig(h);
  return spectral_apply(eig, [t](double x) { return std::exp(kI * (t * x)); });
}

CMatrix geometric_mean(const CMatrix& a, const CMatrix& b) {
  require_square(a, "geometric_mean");
  require_square(b, "geometric_mean");
  if (a.rows() != b.rows()) {
    throw ValidationError(fmt::format("geometric_mean: dimension mismatch {} vs {}", a.rows(), b.rows()));
  }
  const double scale = std::max(scale_of(a), scale_of(b));
  const HermEig ea = herm_eig(a, 1e-10);
  const HermEig eb = herm_eig(b, 1e-10);
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  for (const auto* e : {&ea, &eb}) {
    if (e->values(0) < -1e-10 * scale) {
      throw ValidationError(fmt::format("geometric_mean: indefinite input (min eigenvalue {:.6e})", e->values(0)));
    }
  }
  const auto well_conditioned = [](const HermEig& e) {
    return e.values(0) > 1e-8 * e.values(e.values.size() - 1) && e.values(0) > 0.0;
  };
  if (well_conditioned(ea)) return geometric_mean_direct(ea, b);
  if (well_conditioned(eb)) return geometric_mean_direct(eb, a);
  if (ea.values(n - 1) <= 0.0 || eb.values(n - 1) <= 0.0) return CMatrix::Zero(n, n);

  // Both singular: (A + eps I)#B = A#B + c1 sqrt(eps) + c2 eps + ..., so one
  // Richardson step in sqrt(eps) removes the leading term.
  const auto regularized = [&](double eps) {
    HermEig e = ea;
    e.values.array() = e.values.array().max(0.0) + eps;
    return geometric_mean_direct(e, b);
  };
  double eps = 1e-4 * scale;
  CMatrix f_prev = regularized(eps);
  CMatrix g_prev;
  bool have_prev = false;
  const double stop = 1e-8 * scale;
  while (eps > 1e-15 * scale) {
    eps /= 4.0;
    const CMatrix f_cur = regularized(eps);
    const CMatrix g_cur = 2.0 * f_cur - f_prev;
    if (have_prev && max_abs(g_cur - g_prev) < stop) return hermitian_part(g_cur);
    g_prev = g_cur;
    f_prev = f_cur;
    have_prev = true;
  }
  throw ConvergenceError("geometric_mean: eps-regularized limit did not stabilize");
}

RMatrix geometric_mean_with_transpose(const CMatrix& j) {
  require_square(j, "geometric_mean_with_transpose");
  const RMatrix v = 0.5 * (j.real() + j.real().transpose());
  const RMatrix s = 0.5 * (j.imag() - j.imag().transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> ev(v);
  if (v.rows() == 0) return v;
  if (ev.eigenvalues()(0) <= 1e-14 * std::max(1.0, ev.eigenvalues().cwiseAbs().maxCoeff())) {
    throw ValidationError(fmt::format("geometric_mean_with_transpose: Re J is not positive definite (min eigenvalue {:.6e})",
                                      ev.eigenvalues()(0)));
  }
  const RMatrix v_half = ev.eigenvectors() * ev.eigenvalues().cwiseSqrt().asDiagonal() * ev.eigenvectors().transpose();
  const RMatrix v_inv_half =
      ev.eigenvectors() * ev.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * ev.eigenvectors().transpose();
  const RMatrix sv = v_inv_half * s * v_inv_half;
  RMatrix m = RMatrix::Identity(v.rows(), v.cols()) + sv * sv;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RMatrix> em(m);
  // Eigenvalues at rounding level are exact zeros of a pure block; their square
  // roots would otherwise surface as ~1e-8 noise.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, em.eigenvalues().maxCoeff());
  const RVector root = em.eigenvalues().unaryExpr([floor](double x) { return x <= floor ? 0.0 : std::sqrt(x); });
  const RMatrix m_half = em.eigenvectors() * root.asDiagonal() * em.eigenvectors().transpose();
  RMatrix out = v_half * m_half * v_half;
  return 0.5 * (out + out.transpose());
}

double trace_norm(const CMatrix& a) {
  require_square(a, "trace_norm");
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues().sum();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix kron_power(const CMatrix& a, std::size_t n) {
  if (n == 0) return CMatrix::Identity(1, 1);
  CMatrix out = a;
  for (std::size_t k = 1; k < n; ++k) out = kron(out, a);
  return out;
}

CMatrix partial_trace(const CMatrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> keep) {
  require_square(m, "partial_trace");
  std::size_t total = 1;
  for (const auto d : dims) total *= d;
  if (dims.empty() || total != static_cast<std::size_t>(m.rows())) {
    throw ValidationError(fmt::format("partial_trace: factor dimensions multiply to {}, matrix has dimension {}", total,
                                      m.rows()));
  }
  std::vector<bool> kept(dims.size(), false);
  for (const auto k : keep) {
    if (k >= dims.size()) throw ValidationError(fmt::format("partial_trace: factor index {} out of range", k));
    kept[k] = true;
  }
  // Row-major strides: factor 0 is the most significant.
  std::vector<std::size_t> stride(dims.size());
  std::size_t s = 1;
  for (std::size_t k = dims.size(); k-- > 0;) {
    stride[k] = s;
    s *= dims[k];
  }
  // Offsets of every multi-index restricted to the kept / traced factors.
  const auto offsets = [&](bool want_kept) {
    std::vector<std::size_t> offs{0};
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (kept[k] != want_kept) continue;
      std::vector<std::size_t> next;
      next.reserve(offs.size() * dims[k]);
      for (const auto o : offs) {
        for (std::size_t i = 0; i < dims[k]; ++i) next.push_back(o + i * stride[k]);
      }
      offs = std::move(next);
    }
    return offs;
  };
  const auto off_keep = offsets(true);
  const auto off_trace = offsets(false);
  const auto dk = static_cast<Eigen::Index>(off_keep.size());
  CMatrix out = CMatrix::Zero(dk, dk);
  for (Eigen::Index i = 0; i < dk; ++i) {
    for (Eigen::Index j = 0; j < dk; ++j) {
      cplx acc = 0.0;
      for (const auto t : off_trace) {
        acc += m(static_cast<Eigen::Index>(off_keep[i] + t), static_cast<Eigen::Index>(off_keep[j] + t));
      }
      out(i, j) = acc;
    }
  }
  return out;
}

double min_eigenvalue(const CMatrix& h) { return herm_eig(h, 1e-8).values(0); }

bool is_psd(const CMatrix& h, double tol) {
  if (h.rows() != h.cols()) return false;
  const double sc = scale_of(h);
  if (max_asymmetry(h) > tol * sc) return false;
  if (h.size() == 0) return true;
  return herm_eig(h, tol).values(0) >= -tol * sc;
}

}  // namespace qasym
