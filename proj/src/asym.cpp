#include "qasym/asym.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qasym/error.hpp"
#include "qasym/quadrature.hpp"

namespace qasym {

namespace {

CMatrix weighted_sum(const std::vector<CMatrix>& ops, const RVector& coef) {
  CMatrix out = CMatrix::Zero(ops.front().rows(), ops.front().cols());
  for (std::size_t i = 0; i < ops.size(); ++i) out += coef(static_cast<Eigen::Index>(i)) * ops[i];
  return out;
}

// e^{i xi.A / sqrt n}
CMatrix weyl(const Site& s, const RVector& xi, double scale) {
  return unitary_exp(weighted_sum(s.observables, xi), scale);
}

void check_vector(const RVector& v, std::size_t r, const char* what) {
  if (static_cast<std::size_t>(v.size()) != r) {
    throw ValidationError(fmt::format("{} has length {}, expected {}", what, v.size(), r));
  }
}

void check_n(std::size_t n) {
  if (n == 0) throw ValidationError("n must be at least 1");
}

}  // namespace

void validate_site(const Site& site) {
  const Eigen::Index dim = site.state.rows();
  if (site.state.cols() != dim || dim == 0) throw ValidationError("site state must be square and non-empty");
  if (site.observables.empty()) throw ValidationError("site needs at least one observable");
  for (std::size_t i = 0; i < site.observables.size(); ++i) {
    const CMatrix& a = site.observables[i];
    if (a.rows() != dim || a.cols() != dim) {
      throw ValidationError(fmt::format("observable {} is {}x{}, site dimension is {}", i, a.rows(), a.cols(), dim));
    }
    if (max_asymmetry(a) > 1e-10 * std::max(1.0, max_abs(a))) {
      throw ValidationError(fmt::format("observable {} is not Hermitian", i));
    }
    const cplx mean = (site.state * a).trace();
    if (std::abs(mean) > 1e-10) {
      throw ValidationError(fmt::format("observable {} has mean {:.3e} under the site state, expected 0", i, mean.real()));
    }
  }
}

SiteFamily::SiteFamily(SiteFn sites, Site limit, bool identical)
    : sites_(std::move(sites)), limit_(std::move(limit)), identical_(identical) {
  validate_site(limit_);
}

SiteFamily SiteFamily::iid(Site site) {
  return SiteFamily(nullptr, std::move(site), true);
}

SiteFamily SiteFamily::product(SiteFn sites, Site limit) {
  if (!sites) throw ValidationError("product family needs a site function");
  return SiteFamily(std::move(sites), std::move(limit), false);
}

SiteFamily& SiteFamily::bind_model(ModelFn model, RVector theta0, RMatrix f) {
  if (!model) throw ValidationError("bind_model: empty model function");
  if (static_cast<std::size_t>(f.rows()) != r()) {
    throw ValidationError(fmt::format("bind_model: F has {} rows, expected r = {}", f.rows(), r()));
  }
  if (f.cols() != theta0.size()) {
    throw ValidationError(fmt::format("bind_model: F has {} columns but theta0 has length {}", f.cols(), theta0.size()));
  }
  model_ = std::move(model);
  theta0_ = std::move(theta0);
  f_ = std::move(f);
  return *this;
}

Site SiteFamily::site(std::size_t k) const {
  if (identical_) return limit_;
  Site s = sites_(k);
  if (s.state.rows() != limit_.state.rows() || s.observables.size() != limit_.observables.size()) {
    throw ValidationError(fmt::format("site {} has a different shape from the limit site", k));
  }
  return s;
}

CMatrix SiteFamily::limit_sigma() const {
  const std::size_t nr = r();
  CMatrix sig(nr, nr);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      sig(i, j) = (limit_.state * limit_.observables[j] * limit_.observables[i]).trace();
    }
  }
  return hermitian_part(sig);
}

ParametricModel SiteFamily::site_model(std::size_t k) const {
  if (!model_) throw ValidationError("site family has no parametric model attached");
  return (*model_)(k);
}

cplx factorized_product(const std::function<cplx(std::size_t)>& factor, std::size_t n, bool identical) {
  check_n(n);
  if (identical) {
    const cplx z = factor(1);
    if (z == 0.0) return 0.0;
    const double nn = static_cast<double>(n);
    return std::polar(std::exp(nn * std::log(std::abs(z))), nn * std::arg(z));
  }
  double log_mod = 0.0;
  double phase = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const cplx z = factor(k);
    if (z == 0.0) return 0.0;
    log_mod += std::log(std::abs(z));
    phase += std::arg(z);
  }
  return std::polar(std::exp(log_mod), phase);
}

SandwichValue sandwich_value(const SiteFamily& fam, const RVector& xi, const RVector& eta, std::size_t n) {
  check_n(n);
  check_vector(xi, fam.r(), "xi");
  check_vector(eta, fam.r(), "eta");
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  auto factor = [&](std::size_t k) {
    const Site s = fam.site(k);
    const CMatrix root = matrix_function(s.state, MatFn::Sqrt);
    return (root * weyl(s, xi, scale) * root * weyl(s, eta, scale)).trace();
  };
  SandwichValue out;
  out.lhs = factorized_product(factor, n, fam.identical());
  const CMatrix sig = fam.limit_sigma();
  const RMatrix v = sig.real();
  const RMatrix g = geometric_mean_with_transpose(sig);
  const double quad = xi.dot(v * xi) + 2.0 * xi.dot(g * eta) + eta.dot(v * eta);
  out.rhs = std::exp(-0.5 * quad);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

QuasiCharValue quasi_char_finite_n(const SiteFamily& fam, const RVector& h, const std::vector<RVector>& xis,
                                   std::size_t n) {
  check_n(n);
  if (!fam.has_model()) throw ValidationError("quasi_char_finite_n: site family has no parametric model attached");
  if (xis.empty()) throw ValidationError("quasi_char_finite_n: need at least one xi");
  check_vector(h, static_cast<std::size_t>(fam.theta0().size()), "h");
  for (const auto& xi : xis) check_vector(xi, fam.r(), "xi");
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const RVector theta = fam.theta0() + scale * h;
  auto factor = [&](std::size_t k) {
    const Site s = fam.site(k);
    const DensityMatrix rho = state_at(fam.site_model(k), theta);
    CMatrix prod = rho.matrix();
    for (const auto& xi : xis) prod = prod * weyl(s, xi, scale);
    return prod.trace();
  };
  QuasiCharValue out;
  out.finite_n = factorized_product(factor, n, fam.identical());
  const auto spec = GaussianShiftSpec::from_extension(fam.limit_sigma(), fam.f());
  out.limit = quasi_char_function(spec, h, xis);
  out.gap = std::abs(out.finite_n - out.limit);
  return out;
}

double weyl_residual(const SiteFamily& fam, const RVector& xi, const RVector& eta, std::size_t n) {
  check_n(n);
  check_vector(xi, fam.r(), "xi");
  check_vector(eta, fam.r(), "eta");
  // W(0) = I makes the relation exact; skip the rounding of the unitary products
  if (xi.isZero(0.0) || eta.isZero(0.0)) return 0.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const RVector sum = xi + eta;
  auto factor = [&](std::size_t k) {
    const Site s = fam.site(k);
    return (s.state * weyl(s, -eta, scale) * weyl(s, -xi, scale) * weyl(s, sum, scale)).trace();
  };
  const cplx prod = factorized_product(factor, n, fam.identical());
  const RMatrix s = fam.limit_sigma().imag();
  const cplx phase = std::exp(kI * xi.dot(s * eta));
  return 2.0 - 2.0 * (phase * prod).real();
}

QlanResidual qlan_residual(const ParametricModel& m, const RVector& theta0, const RVector& h, std::size_t n) {
  check_n(n);
  check_vector(h, m.param_dim(), "h");
  const std::size_t dim = m.hilbert_dim();
  double total = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    total *= static_cast<double>(dim);
    if (total > static_cast<double>(kQlanMaxDim)) {
      throw ValidationError(fmt::format("qlan_residual: dimension {}^{} exceeds the cap {}", dim, n, kQlanMaxDim));
    }
  }
  const auto total_dim = static_cast<std::size_t>(total);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  const DensityMatrix rho1 = state_at(m, theta0);
  const DensityMatrix sigma1 = state_at(m, theta0 + scale * h);
  const CMatrix rho_n = kron_power(rho1.matrix(), n);
  const CMatrix sigma_n = kron_power(sigma1.matrix(), n);

  const LebesgueDecomposition dec = sqrt_likelihood_ratio(DensityMatrix(rho_n), DensityMatrix(sigma_n));
  FnOptions opts;
  opts.kernel = KernelPolicy::Exclude;
  const CMatrix log_ratio = 2.0 * matrix_function(dec.R, MatFn::Log, opts);

  // h.Delta^(n) with Delta_i^(n) = n^{-1/2} sum_k L_i at site k.
  const std::vector<CMatrix> slds = sld(m, theta0);
  const RMatrix j = fisher_from_slds(rho1.matrix(), slds);
  CMatrix hl = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < slds.size(); ++i) hl += h(static_cast<Eigen::Index>(i)) * slds[i];
  const auto big = static_cast<Eigen::Index>(total_dim);
  CMatrix score = CMatrix::Zero(big, big);
  const CMatrix eye = CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < n; ++k) {
    CMatrix term = (k == 0) ? hl : eye;
    for (std::size_t q = 1; q < n; ++q) term = kron(term, q == k ? hl : eye);
    score += term;
  }
  score *= scale;
  score -= 0.5 * h.dot(j * h) * CMatrix::Identity(big, big);

  auto l2 = [&](const CMatrix& y) { return std::sqrt(std::max(0.0, (rho_n * y * y).trace().real())); };
  QlanResidual out;
  out.residual = l2(log_ratio - score);
  out.log_ratio_norm = l2(log_ratio);
  out.score_norm = l2(score);
  out.singular_mass = dec.sigma_perp.trace().real();
  out.total_dim = total_dim;
  return out;
}

std::vector<PovmDemoRow> no_limit_povm_demo(const std::vector<double>& h_values, std::size_t n,
                                            std::size_t hermite_order) {
  check_n(n);
  const ParametricModel model = make_pure_1d();
  const CMatrix rho0 = state_at(model, RVector::Zero(1)).matrix();
  const QuadratureRule gh = gauss_hermite(hermite_order);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  auto m = [](double x) { return std::numbers::sqrt2 * std::exp(-0.5 * x * x); };

  std::vector<PovmDemoRow> rows;
  rows.reserve(h_values.size());
  for (const double h : h_values) {
    PovmDemoRow row;
    row.h = h;
    RVector theta(1);
    theta << scale * h;
    const cplx overlap = (state_at(model, theta).matrix() * rho0).trace();
    row.finite_n_prob = factorized_product([&](std::size_t) { return overlap; }, n, true).real();
    row.limit_prob = std::exp(-0.25 * h * h);
    double acc = 0.0;
    for (std::size_t q = 0; q < gh.nodes.size(); ++q) acc += gh.weights[q] * m(h + std::numbers::sqrt2 * gh.nodes[q]);
    row.m_integral = acc / std::sqrt(std::numbers::pi);
    row.m_gap = std::abs(row.m_integral - row.limit_prob);
    row.m_max = m(0.0);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qasym
