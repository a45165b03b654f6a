#include "qasym/model.hpp"

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "qasym/error.hpp"

namespace qasym {

DensityMatrix::DensityMatrix(CMatrix m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ValidationError(fmt::format("density matrix must be square and non-empty, got {}x{}", m.rows(), m.cols()));
  }
  const double asym = max_asymmetry(m);
  if (asym > tol) throw ValidationError(fmt::format("density matrix is not Hermitian (asymmetry {:.3e})", asym));
  m_ = hermitian_part(m);
  const double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > tol) throw ValidationError(fmt::format("density matrix trace is {:.17g}, expected 1", tr));
  const double lmin = herm_eig(m_).values(0);
  if (lmin < -tol) throw ValidationError(fmt::format("density matrix is not PSD (min eigenvalue {:.6e})", lmin));
}

ParametricModel::ParametricModel(std::string name, std::size_t hilbert_dim, std::size_t param_dim, StateFn state,
                                 DomainFn domain, std::optional<DerivativeFn> derivative)
    : name_(std::move(name)),
      hilbert_dim_(hilbert_dim),
      param_dim_(param_dim),
      state_(std::move(state)),
      domain_(std::move(domain)),
      derivative_(std::move(derivative)) {}

bool ParametricModel::in_domain(const RVector& theta) const {
  return static_cast<std::size_t>(theta.size()) == param_dim_ && theta.allFinite() && domain_(theta);
}

ParametricModel ParametricModel::without_analytic_derivative() const {
  return ParametricModel(name_, hilbert_dim_, param_dim_, state_, domain_, std::nullopt);
}

ParametricModel make_pure_1d() {
  auto state = [](const RVector& t) {
    const double c = std::cosh(0.5 * t(0));
    const double s = std::sinh(0.5 * t(0));
    CMatrix rho(2, 2);
    rho << c * c, c * s, c * s, s * s;
    return CMatrix(rho / std::cosh(t(0)));
  };
  auto deriv = [](const RVector& t, std::size_t) {
    const double c = std::cosh(0.5 * t(0));
    const double s = std::sinh(0.5 * t(0));
    const double ch = std::cosh(t(0));
    RVector v(2), dv(2);
    v << c, s;
    dv << 0.5 * s, 0.5 * c;
    const RMatrix d = (dv * v.transpose() + v * dv.transpose()) / ch - v * v.transpose() * (std::tanh(t(0)) / ch);
    return CMatrix(d.cast<cplx>());
  };
  return ParametricModel("pure_1d", 2, 1, state, [](const RVector&) { return true; }, deriv);
}

ParametricModel make_spin_coherent() {
  auto state = [](const RVector& t) {
    const double z = std::sqrt(std::max(0.0, 1.0 - t(0) * t(0) - t(1) * t(1)));
    return CMatrix(0.5 * (pauli(0) + t(0) * pauli(1) + t(1) * pauli(2) + z * pauli(3)));
  };
  auto deriv = [](const RVector& t, std::size_t i) {
    const double z = std::sqrt(1.0 - t(0) * t(0) - t(1) * t(1));
    return CMatrix(0.5 * (pauli(static_cast<int>(i) + 1) - (t(static_cast<Eigen::Index>(i)) / z) * pauli(3)));
  };
  auto domain = [](const RVector& t) { return t.squaredNorm() < 1.0; };
  return ParametricModel("spin_coherent", 2, 2, state, domain, deriv);
}

ParametricModel make_bloch_ball() {
  auto state = [](const RVector& t) {
    return CMatrix(0.5 * (pauli(0) + t(0) * pauli(1) + t(1) * pauli(2) + t(2) * pauli(3)));
  };
  auto deriv = [](const RVector&, std::size_t i) { return CMatrix(0.5 * pauli(static_cast<int>(i) + 1)); };
  auto domain = [](const RVector& t) { return t.squaredNorm() < 1.0; };
  return ParametricModel("bloch_ball", 2, 3, state, domain, deriv);
}

ParametricModel make_affine(CMatrix rho0, std::vector<CMatrix> directions) {
  if (rho0.rows() != rho0.cols() || rho0.rows() == 0) throw ValidationError("affine model: rho0 must be square");
  for (const auto& b : directions) {
    if (b.rows() != rho0.rows() || b.cols() != rho0.cols()) {
      throw ValidationError("affine model: direction matrices must match rho0 in shape");
    }
    if (max_asymmetry(b) > 1e-12) throw ValidationError("affine model: direction matrices must be Hermitian");
  }
  const auto dim = static_cast<std::size_t>(rho0.rows());
  const std::size_t d = directions.size();
  auto state = [rho0, directions](const RVector& t) {
    CMatrix rho = rho0;
    for (std::size_t i = 0; i < directions.size(); ++i) rho += t(static_cast<Eigen::Index>(i)) * directions[i];
    return rho;
  };
  auto domain = [state](const RVector& t) {
    const CMatrix rho = state(t);
    return std::abs(rho.trace().real() - 1.0) <= 1e-10 && is_psd(rho, 1e-10);
  };
  auto deriv = [directions](const RVector&, std::size_t i) { return directions.at(i); };
  return ParametricModel("affine", dim, d, state, domain, deriv);
}

ProductModel make_product_non_iid(const RVector& base, double decay, std::size_t param_dim) {
  if (base.size() != 3) throw ValidationError("product_non_iid: base must be a Bloch 3-vector");
  if (param_dim < 1 || param_dim > 3) throw ValidationError("product_non_iid: param_dim must be 1, 2 or 3");
  // The site-k offset scales `base` by (1 + decay/k); k = 0 encodes the limit.
  auto site_model = [base, decay, param_dim](std::size_t k) {
    const double factor = k == 0 ? 1.0 : 1.0 + decay / static_cast<double>(k);
    const RVector offset = factor * base;
    auto bloch = [offset, param_dim](const RVector& t) {
      RVector b = offset;
      for (std::size_t i = 0; i < param_dim; ++i) b(static_cast<Eigen::Index>(i)) += t(static_cast<Eigen::Index>(i));
      return b;
    };
    auto state = [bloch](const RVector& t) {
      const RVector b = bloch(t);
      return CMatrix(0.5 * (pauli(0) + b(0) * pauli(1) + b(1) * pauli(2) + b(2) * pauli(3)));
    };
    auto domain = [bloch](const RVector& t) { return bloch(t).squaredNorm() < 1.0; };
    auto deriv = [](const RVector&, std::size_t i) { return CMatrix(0.5 * pauli(static_cast<int>(i) + 1)); };
    const std::string name = k == 0 ? "product_non_iid[inf]" : fmt::format("product_non_iid[{}]", k);
    return ParametricModel(name, 2, param_dim, state, domain, deriv);
  };
  return ProductModel{"product_non_iid", 2, param_dim, [site_model](std::size_t k) { return site_model(k); },
                      site_model(0)};
}

DensityMatrix state_at(const ParametricModel& m, const RVector& theta) {
  if (static_cast<std::size_t>(theta.size()) != m.param_dim()) {
    throw ValidationError(fmt::format("{}: expected {} parameters, got {}", m.name(), m.param_dim(), theta.size()));
  }
  if (!m.in_domain(theta)) {
    throw ValidationError(fmt::format("{}: theta is outside the model domain", m.name()));
  }
  return DensityMatrix(m.raw_state(theta));
}

CMatrix finite_difference_derivative(const ParametricModel& m, const RVector& theta, std::size_t i, double step) {
  if (i >= m.param_dim()) throw ValidationError(fmt::format("{}: parameter index {} out of range", m.name(), i));
  RVector plus = theta;
  RVector minus = theta;
  plus(static_cast<Eigen::Index>(i)) += step;
  minus(static_cast<Eigen::Index>(i)) -= step;
  if (!m.in_domain(plus) || !m.in_domain(minus)) {
    throw ValidationError(fmt::format("{}: theta is too close to the domain boundary for the difference stencil",
                                      m.name()));
  }
  RVector plus_half = theta;
  RVector minus_half = theta;
  plus_half(static_cast<Eigen::Index>(i)) += 0.5 * step;
  minus_half(static_cast<Eigen::Index>(i)) -= 0.5 * step;
  const CMatrix coarse = (m.raw_state(plus) - m.raw_state(minus)) / (2.0 * step);
  const CMatrix fine = (m.raw_state(plus_half) - m.raw_state(minus_half)) / step;
  return hermitian_part((4.0 * fine - coarse) / 3.0);
}

CMatrix derivative(const ParametricModel& m, const RVector& theta, std::size_t i) {
  if (i >= m.param_dim()) throw ValidationError(fmt::format("{}: parameter index {} out of range", m.name(), i));
  if (!m.in_domain(theta)) throw ValidationError(fmt::format("{}: theta is outside the model domain", m.name()));
  if (m.analytic_derivative()) return hermitian_part((*m.analytic_derivative())(theta, i));
  return finite_difference_derivative(m, theta, i);
}

CMatrix solve_sld(const CMatrix& rho, const CMatrix& drho, std::optional<double> cutoff) {
  const HermEig eig = herm_eig(rho, 1e-10);
  const Eigen::Index n = eig.values.size();
  const double cut = cutoff.value_or(1e-10 * std::max(eig.values(n - 1), 0.0));
  const CMatrix d = eig.vectors.adjoint() * drho * eig.vectors;
  CMatrix l = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double s = eig.values(j) + eig.values(k);
      if (s >= cut && s > 0.0) l(j, k) = 2.0 * d(j, k) / s;
    }
  }
  return hermitian_part(eig.vectors * l * eig.vectors.adjoint());
}

std::vector<CMatrix> sld(const ParametricModel& m, const RVector& theta) {
  const DensityMatrix rho = state_at(m, theta);
  std::vector<CMatrix> out;
  out.reserve(m.param_dim());
  for (std::size_t i = 0; i < m.param_dim(); ++i) out.push_back(solve_sld(rho.matrix(), derivative(m, theta, i)));
  return out;
}

RMatrix fisher_from_slds(const CMatrix& rho, const std::vector<CMatrix>& slds) {
  const auto d = static_cast<Eigen::Index>(slds.size());
  RMatrix j(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      j(a, b) = (rho * slds[static_cast<std::size_t>(b)] * slds[static_cast<std::size_t>(a)]).trace().real();
      j(b, a) = j(a, b);
    }
  }
  return j;
}

RMatrix sld_fisher(const ParametricModel& m, const RVector& theta) {
  return fisher_from_slds(state_at(m, theta).matrix(), sld(m, theta));
}

namespace {

// Moore-Penrose inverse of a Hermitian matrix with a relative cutoff.
CMatrix hermitian_pinv(const CMatrix& h) {
  if (h.size() == 0) return h;
  const HermEig e = herm_eig(hermitian_part(h), 1e-8);
  const double cut = 1e-12 * std::max(e.values.cwiseAbs().maxCoeff(), 1e-300);
  return spectral_apply(e, [cut](double x) { return std::abs(x) > cut ? 1.0 / x : 0.0; });
}

}  // namespace

LebesgueDecomposition sqrt_likelihood_ratio(const DensityMatrix& rho, const DensityMatrix& sigma,
                                            std::optional<double> cutoff) {
  if (rho.dim() != sigma.dim()) {
    throw ValidationError(fmt::format("sqrt_likelihood_ratio: dimension mismatch {} vs {}", rho.dim(), sigma.dim()));
  }
  const HermEig eig = herm_eig(rho.matrix());
  const Eigen::Index n = eig.values.size();
  const double cut = cutoff.value_or(1e-10 * eig.values(n - 1));
  std::vector<Eigen::Index> supp, ker;
  for (Eigen::Index i = 0; i < n; ++i) (eig.values(i) > cut ? supp : ker).push_back(i);

  // Everything below lives in the eigenbasis of rho, support block first.
  std::vector<Eigen::Index> order = supp;
  order.insert(order.end(), ker.begin(), ker.end());
  CMatrix u(n, n);
  for (Eigen::Index i = 0; i < n; ++i) u.col(i) = eig.vectors.col(order[static_cast<std::size_t>(i)]);
  const CMatrix s = hermitian_part(u.adjoint() * sigma.matrix() * u);
  const auto ns = static_cast<Eigen::Index>(supp.size());
  const Eigen::Index nk = n - ns;

  RVector lam(ns);
  for (Eigen::Index i = 0; i < ns; ++i) lam(i) = eig.values(supp[static_cast<std::size_t>(i)]);
  const RVector lam_half = lam.cwiseSqrt();
  const RVector lam_inv_half = lam_half.cwiseInverse();

  const CMatrix s11 = s.topLeftCorner(ns, ns);
  const CMatrix inner = hermitian_part(lam_half.asDiagonal() * s11 * lam_half.asDiagonal());
  const CMatrix middle = matrix_function(inner, MatFn::Sqrt);
  const CMatrix r11 = hermitian_part(lam_inv_half.asDiagonal() * middle * lam_inv_half.asDiagonal());

  CMatrix r = CMatrix::Zero(n, n);
  r.topLeftCorner(ns, ns) = r11;
  if (nk > 0) {
    const CMatrix s12 = s.topRightCorner(ns, nk);
    const CMatrix r11_pinv = hermitian_pinv(r11);
    const CMatrix r12 = lam.cwiseInverse().asDiagonal() * r11_pinv * s12;
    r.topRightCorner(ns, nk) = r12;
    r.bottomLeftCorner(nk, ns) = r12.adjoint();
    // R22 never meets rho; the Schur-complement choice keeps R positive.
    r.bottomRightCorner(nk, nk) = hermitian_part(r12.adjoint() * r11_pinv * r12);
  }

  RVector lam_full = RVector::Zero(n);
  lam_full.head(ns) = lam;
  const CMatrix rho_diag = lam_full.cast<cplx>().asDiagonal();
  CMatrix perp = hermitian_part(s - r * rho_diag * r);
  // Only the kernel block can carry singular weight.
  perp.topLeftCorner(ns, n).setZero();
  perp.bottomLeftCorner(nk, ns).setZero();

  LebesgueDecomposition out;
  if (nk > 0) {
    const HermEig pe = herm_eig(perp.bottomRightCorner(nk, nk), 1e-8);
    out.clamped = std::min(0.0, pe.values(0));
    if (out.clamped < -1e-8) {
      throw ConvergenceError(fmt::format("sqrt_likelihood_ratio: singular part has eigenvalue {:.3e}", out.clamped));
    }
    perp.bottomRightCorner(nk, nk) = spectral_apply(pe, [](double x) { return std::max(x, 0.0); });
  }
  out.R = hermitian_part(u * r * u.adjoint());
  out.sigma_perp = hermitian_part(u * perp * u.adjoint());
  out.residual = max_abs(sigma.matrix() - out.R * rho.matrix() * out.R - out.sigma_perp);
  if (out.residual > 1e-8) {
    throw ConvergenceError(
        fmt::format("sqrt_likelihood_ratio: decomposition residual {:.3e} exceeds 1e-8", out.residual));
  }
  return out;
}

}  // namespace qasym
