#include "qasym/bound.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qasym/dext.hpp"
#include "qasym/error.hpp"
#include "qasym/gauss.hpp"

namespace qasym {

namespace {

RMatrix sym_sqrt(const RMatrix& g, bool inverse) {
  Eigen::SelfAdjointEigenSolver<RMatrix> e(0.5 * (g + g.transpose()));
  RVector v = e.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  if (inverse) v = v.cwiseInverse();
  return e.eigenvectors() * v.asDiagonal() * e.eigenvectors().transpose();
}

// |A| = (A^T A)^{1/2} for real A.
RMatrix real_abs(const RMatrix& a) { return sym_sqrt(a.transpose() * a, false); }

// Variables: upper triangle of V, then B row-major.
class BarrierProblem {
 public:
  BarrierProblem(const CMatrix& sigma, const RMatrix& kp, const RMatrix& null, const RMatrix& g)
      : sigma_(sigma), kp_(kp), null_(null), g_(g), d_(g.rows()), nb_rows_(null.cols()) {
    for (Eigen::Index i = 0; i < d_; ++i) {
      for (Eigen::Index j = i; j < d_; ++j) {
        RMatrix e = RMatrix::Zero(d_, d_);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        dv_.push_back(e);
        dk_.push_back(RMatrix::Zero(kp.rows(), d_));
      }
    }
    for (Eigen::Index a = 0; a < nb_rows_; ++a) {
      for (Eigen::Index b = 0; b < d_; ++b) {
        RMatrix e = RMatrix::Zero(nb_rows_, d_);
        e(a, b) = 1.0;
        dv_.push_back(RMatrix::Zero(d_, d_));
        dk_.push_back(null_ * e);
      }
    }
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(dv_.size()); }

  RMatrix v_of(const RVector& x) const {
    RMatrix v(d_, d_);
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < d_; ++i) {
      for (Eigen::Index j = i; j < d_; ++j) v(i, j) = v(j, i) = x(p++);
    }
    return v;
  }

  RMatrix k_of(const RVector& x) const {
    RMatrix k = kp_;
    const Eigen::Index off = d_ * (d_ + 1) / 2;
    for (Eigen::Index a = 0; a < nb_rows_; ++a) {
      for (Eigen::Index b = 0; b < d_; ++b) k.col(b) += x(off + a * d_ + b) * null_.col(a);
    }
    return k;
  }

  RVector pack(const RMatrix& v) const {
    RVector x = RVector::Zero(size());
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < d_; ++i) {
      for (Eigen::Index j = i; j < d_; ++j) x(p++) = v(i, j);
    }
    return x;
  }

  // Barrier value; nullopt when W = V - K^T Sigma K is not positive definite.
  std::optional<double> value(const RVector& x, double mu) const {
    const RMatrix v = v_of(x);
    const RMatrix k = k_of(x);
    const CMatrix w = v.cast<cplx>() - k.transpose().cast<cplx>() * sigma_ * k.cast<cplx>();
    Eigen::LLT<CMatrix> llt(hermitian_part(w));
    if (llt.info() != Eigen::Success) return std::nullopt;
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < d_; ++i) {
      const double l = llt.matrixL()(i, i).real();
      if (!(l > 0.0)) return std::nullopt;
      logdet += 2.0 * std::log(l);
    }
    return (g_ * v).trace() - mu * logdet;
  }

  void derivatives(const RVector& x, double mu, RVector& grad, RMatrix& hess) const {
    const RMatrix v = v_of(x);
    const RMatrix k = k_of(x);
    const CMatrix kc = k.cast<cplx>();
    const CMatrix w = hermitian_part(v.cast<cplx>() - kc.transpose() * sigma_ * kc);
    const CMatrix winv = w.llt().solve(CMatrix::Identity(d_, d_));
    const Eigen::Index p = size();
    std::vector<CMatrix> dw(static_cast<std::size_t>(p));
    std::vector<CMatrix> winv_dw(static_cast<std::size_t>(p));
    const CMatrix sk = sigma_ * kc;
    for (Eigen::Index u = 0; u < p; ++u) {
      const auto su = static_cast<std::size_t>(u);
      const CMatrix dkc = dk_[su].cast<cplx>();
      const CMatrix cross = dkc.transpose() * sk;
      dw[su] = dv_[su].cast<cplx>() - cross - cross.adjoint();
      winv_dw[su] = winv * dw[su];
    }
    grad.resize(p);
    hess.resize(p, p);
    for (Eigen::Index u = 0; u < p; ++u) {
      const auto su = static_cast<std::size_t>(u);
      grad(u) = (g_ * dv_[su]).trace() - mu * winv_dw[su].trace().real();
      for (Eigen::Index t = 0; t <= u; ++t) {
        const auto st = static_cast<std::size_t>(t);
        double h = (winv_dw[su] * winv_dw[st]).trace().real();
        if (u >= nv() && t >= nv()) {
          const CMatrix m = dk_[su].transpose().cast<cplx>() * sigma_ * dk_[st].cast<cplx>();
          h += (winv * (m + m.adjoint())).trace().real();
        }
        hess(u, t) = hess(t, u) = mu * h;
      }
    }
  }

  Eigen::Index nv() const { return d_ * (d_ + 1) / 2; }

 private:
  const CMatrix& sigma_;
  RMatrix kp_;
  RMatrix null_;
  RMatrix g_;
  Eigen::Index d_;
  Eigen::Index nb_rows_;
  std::vector<RMatrix> dv_;
  std::vector<RMatrix> dk_;
};

void validate_weight(const RMatrix& g, Eigen::Index d) {
  if (g.rows() != d || g.cols() != d) {
    throw ValidationError(fmt::format("weight matrix is {}x{}, expected {}x{}", g.rows(), g.cols(), d, d));
  }
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
    throw ValidationError("weight matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> e(g);
  if (e.eigenvalues()(0) <= 0.0) {
    throw ValidationError(fmt::format("weight matrix is not positive definite (min eigenvalue {:.3e})", e.eigenvalues()(0)));
  }
}

}  // namespace

double rep_objective(const CMatrix& sigma, const RMatrix& k, const RMatrix& g) {
  const CMatrix z = k.transpose().cast<cplx>() * sigma * k.cast<cplx>();
  const RMatrix gh = sym_sqrt(g, false);
  const RMatrix im = 0.5 * (z.imag() - z.imag().transpose());
  return (g * z.real()).trace() + trace_norm((gh * im * gh).cast<cplx>());
}

RMatrix optimal_covariance(const BoundResult& res, const RMatrix& g) {
  validate_weight(g, res.z_star.rows());
  const RMatrix gh = sym_sqrt(g, false);
  const RMatrix gih = sym_sqrt(g, true);
  const RMatrix re = 0.5 * (res.z_star.real() + res.z_star.real().transpose());
  const RMatrix im = 0.5 * (res.z_star.imag() - res.z_star.imag().transpose());
  RMatrix v = re + gih * real_abs(gh * im * gh) * gih;
  v = 0.5 * (v + v.transpose()).eval();
  const double scale = std::max(1.0, std::abs(res.value));
  const double tr = (g * v).trace();
  if (std::abs(tr - res.value) > 1e-8 * scale) {
    throw ConvergenceError(fmt::format("optimal_covariance: Tr(G V*) = {:.17g} differs from the bound {:.17g}", tr,
                                       res.value));
  }
  const double lmin = herm_eig(hermitian_part(v.cast<cplx>() - res.z_star), 1e-8).values(0);
  if (lmin < -1e-8 * scale) {
    throw ConvergenceError(fmt::format("optimal_covariance: V* - Z* has eigenvalue {:.3e}", lmin));
  }
  return v;
}

BoundResult rep_bound(const CMatrix& sigma, const CMatrix& tau, const RMatrix& g, const BarrierOptions& opts) {
  validate_covariance(sigma);
  const Eigen::Index r = sigma.rows();
  const Eigen::Index d = tau.cols();
  if (tau.rows() != r || d == 0) {
    throw ValidationError(fmt::format("tau is {}x{}, expected {}xd with d >= 1", tau.rows(), tau.cols(), r));
  }
  if (d > r) throw ValidationError(fmt::format("tau has more columns ({}) than rows ({})", d, r));
  validate_weight(g, d);
  if (!(opts.mu0 > 0.0) || !(opts.factor > 0.0 && opts.factor < 1.0) || !(opts.tolerance > 0.0)) {
    throw ValidationError("barrier options: need mu0 > 0, 0 < factor < 1 and tolerance > 0");
  }

  const RMatrix t = tau.real();
  Eigen::JacobiSVD<RMatrix> svd(t.transpose(), Eigen::ComputeFullV);
  const RVector sv = svd.singularValues();
  if (sv(d - 1) <= 1e-10 * std::max(1.0, sv(0))) {
    throw ValidationError(fmt::format("rank(Re tau) < d (smallest singular value {:.3e})", sv(d - 1)));
  }
  const RMatrix kp = t * (t.transpose() * t).inverse();
  const RMatrix null = svd.matrixV().rightCols(r - d);

  const BarrierProblem prob(sigma, kp, null, g);
  RVector x = RVector::Zero(prob.size());
  {
    const CMatrix z = kp.transpose().cast<cplx>() * sigma * kp.cast<cplx>();
    const RMatrix v0 = z.real() + (max_abs(z) * static_cast<double>(d) + 1.0) * RMatrix::Identity(d, d);
    x = prob.pack(0.5 * (v0 + v0.transpose()));
  }

  BoundResult res;
  double mu = opts.mu0;
  const auto barrier_dim = static_cast<double>(d + r);
  RVector grad;
  RMatrix hess;
  while (true) {
    // Centering by damped Newton.
    for (int inner = 0;; ++inner) {
      if (res.iterations >= opts.max_newton) {
        throw ConvergenceError(fmt::format("rep_bound: Newton budget of {} steps exhausted at mu = {:.3e}",
                                           opts.max_newton, mu));
      }
      prob.derivatives(x, mu, grad, hess);
      Eigen::LDLT<RMatrix> ldlt(hess);
      RVector step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        const double ridge = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
        step = (hess + ridge * RMatrix::Identity(hess.rows(), hess.cols())).ldlt().solve(-grad);
      }
      const double decrement = -grad.dot(step);
      ++res.iterations;
      const double f0 = *prob.value(x, mu);
      // below this the Armijo test only sees rounding noise in f
      const double noise = 256.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f0));
      if (!(decrement > std::max(2e-14, noise))) break;
      double s = 1.0;
      bool moved = false;
      while (s > 1e-14) {
        const RVector trial = x + s * step;
        const auto f1 = prob.value(trial, mu);
        if (f1 && *f1 <= f0 - 0.25 * s * decrement) {
          x = trial;
          moved = f0 - *f1 > noise / 64.0;
          break;
        }
        s *= 0.5;
      }
      if (!moved) break;
    }
    if (mu * barrier_dim < opts.tolerance) break;
    mu *= opts.factor;
  }

  res.final_mu = mu;
  res.k_star = prob.k_of(x);
  res.z_star = hermitian_part(res.k_star.transpose().cast<cplx>() * sigma * res.k_star.cast<cplx>());
  res.value = rep_objective(sigma, res.k_star, g);
  res.barrier_value = (g * prob.v_of(x)).trace();
  res.gap = res.barrier_value - res.value;
  res.v_star = optimal_covariance(res, g);
  return res;
}

BoundResult holevo_bound_iid(const ParametricModel& m, const RVector& theta0, const RMatrix& g,
                             const BarrierOptions& opts) {
  const DensityMatrix rho = state_at(m, theta0);
  const DExtension ext = build_d_extension(rho, sld(m, theta0));
  return rep_bound(ext.sigma, ext.tau, g, opts);
}

}  // namespace qasym
