#include "qasym/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qasym/error.hpp"

namespace qasym {

void validate_covariance(const CMatrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw ValidationError(fmt::format("covariance must be square and non-empty, got {}x{}", sigma.rows(), sigma.cols()));
  }
  const double scale = std::max(1.0, max_abs(sigma));
  if (max_asymmetry(sigma) > 1e-10 * scale) {
    throw ValidationError(fmt::format("covariance is not Hermitian (asymmetry {:.3e})", max_asymmetry(sigma)));
  }
  const double lmin = herm_eig(sigma, 1e-10).values(0);
  if (lmin < -1e-10 * scale) throw ValidationError(fmt::format("covariance is not PSD (min eigenvalue {:.6e})", lmin));
  const RMatrix v = sigma.real();
  Eigen::SelfAdjointEigenSolver<RMatrix> ev(0.5 * (v + v.transpose()));
  if (ev.eigenvalues()(0) <= 1e-10) {
    throw ValidationError(fmt::format("Re Sigma is not positive definite (min eigenvalue {:.6e})", ev.eigenvalues()(0)));
  }
  const RMatrix s = sigma.imag();
  if ((s + s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("Im Sigma is not skew-symmetric");
  }
}

GaussianShiftSpec::GaussianShiftSpec(CMatrix sigma, CMatrix tau, RMatrix f)
    : sigma_(std::move(sigma)), tau_(std::move(tau)), f_(std::move(f)) {
  validate_covariance(sigma_);
  sigma_ = hermitian_part(sigma_);
  if (tau_.rows() != sigma_.rows() || f_.rows() != sigma_.rows() || f_.cols() != tau_.cols()) {
    throw ValidationError(fmt::format("Gaussian spec shapes disagree: Sigma {}x{}, tau {}x{}, F {}x{}", sigma_.rows(),
                                      sigma_.cols(), tau_.rows(), tau_.cols(), f_.rows(), f_.cols()));
  }
  const CMatrix expected = sigma_ * f_.cast<cplx>();
  if (tau_.size() > 0 && (tau_ - expected).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, max_abs(expected))) {
    throw ValidationError("Gaussian spec: tau differs from Sigma F");
  }
}

GaussianShiftSpec GaussianShiftSpec::from_extension(CMatrix sigma, RMatrix f) {
  CMatrix tau = sigma * f.cast<cplx>();
  return GaussianShiftSpec(std::move(sigma), std::move(tau), std::move(f));
}

GaussianShiftSpec GaussianShiftSpec::covariance_only(CMatrix sigma) {
  const Eigen::Index r = sigma.rows();
  return GaussianShiftSpec(std::move(sigma), CMatrix(r, 0), RMatrix(r, 0));
}

RVector GaussianShiftSpec::mean(const RVector& h) const {
  if (h.size() != d()) throw ValidationError(fmt::format("shift has length {}, expected {}", h.size(), d()));
  if (d() == 0) return RVector::Zero(r());
  return tau_.real() * h;
}

cplx char_function(const GaussianShiftSpec& spec, const RVector& h, const RVector& xi) {
  if (xi.size() != spec.r()) throw ValidationError(fmt::format("xi has length {}, expected {}", xi.size(), spec.r()));
  const RVector m = spec.mean(h);
  const double quad = xi.dot(spec.v() * xi);
  return std::exp(cplx(-0.5 * quad, xi.dot(m)));
}

cplx quasi_char_function(const GaussianShiftSpec& spec, const RVector& h, const std::vector<RVector>& xis) {
  if (xis.empty()) throw ValidationError("quasi_char_function: need at least one xi");
  const RVector m = spec.mean(h);
  const CMatrix& sig = spec.sigma();
  std::vector<CVector> cx;
  cx.reserve(xis.size());
  for (const auto& xi : xis) {
    if (xi.size() != spec.r()) throw ValidationError(fmt::format("xi has length {}, expected {}", xi.size(), spec.r()));
    cx.push_back(xi.cast<cplx>());
  }
  cplx expo = 0.0;
  for (std::size_t t = 0; t < xis.size(); ++t) {
    expo += kI * xis[t].dot(m) - 0.5 * cx[t].dot(sig * cx[t]);
    for (std::size_t u = t + 1; u < xis.size(); ++u) expo -= cx[u].dot(sig * cx[t]);
  }
  return std::exp(expo);
}

Purity purity(const CMatrix& sigma) {
  validate_covariance(sigma);
  const RMatrix v = sigma.real();
  const RMatrix s = sigma.imag();
  Eigen::JacobiSVD<RMatrix> svd(s);
  const double smin = svd.singularValues().minCoeff();
  if (smin <= 1e-10) {
    throw ValidationError(fmt::format(
        "purity: Im Sigma is singular (min singular value {:.3e}); call split_classical_quantum first and pass the "
        "quantum block",
        smin));
  }
  Purity p;
  p.det_v = v.determinant();
  p.det_s = s.determinant();
  p.tr_rho_sq = std::sqrt(std::max(0.0, p.det_s) / p.det_v);
  p.is_pure = std::abs(p.det_v - p.det_s) <= 1e-8 * std::abs(p.det_v);
  return p;
}

CMatrix doubled_covariance(const CMatrix& j) {
  const Eigen::Index r = j.rows();
  const CMatrix g = geometric_mean_with_transpose(j).cast<cplx>();
  CMatrix out(2 * r, 2 * r);
  out << j, g, g, j.transpose();
  return out;
}

SplitForm split_classical_quantum(const CMatrix& sigma) {
  validate_covariance(sigma);
  const Eigen::Index r = sigma.rows();
  const RMatrix v = 0.5 * (sigma.real() + sigma.real().transpose());
  const RMatrix s = 0.5 * (sigma.imag() - sigma.imag().transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> ev(v);
  const RMatrix w = ev.eigenvectors() * ev.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    ev.eigenvectors().transpose();
  const RMatrix sw = w * s * w;

  Eigen::RealSchur<RMatrix> schur(sw);
  const RMatrix& q = schur.matrixU();
  const RMatrix& t = schur.matrixT();

  struct Block {
    std::vector<Eigen::Index> cols;
    double magnitude;
  };
  std::vector<Block> zero_blocks, pair_blocks;
  const double threshold = 1e-10;
  for (Eigen::Index i = 0; i < r;) {
    if (i + 1 < r && std::abs(t(i + 1, i)) > 0.0) {
      const double mag = std::sqrt(std::abs(t(i, i + 1) * t(i + 1, i)));
      if (mag > threshold) {
        // Orient the block as [[0, b], [-b, 0]] with b > 0.
        if (t(i, i + 1) > 0.0) {
          pair_blocks.push_back({{i, i + 1}, mag});
        } else {
          pair_blocks.push_back({{i + 1, i}, mag});
        }
      } else {
        zero_blocks.push_back({{i}, 0.0});
        zero_blocks.push_back({{i + 1}, 0.0});
      }
      i += 2;
    } else {
      zero_blocks.push_back({{i}, std::abs(t(i, i))});
      i += 1;
    }
  }
  std::stable_sort(pair_blocks.begin(), pair_blocks.end(),
                   [](const Block& a, const Block& b) { return a.magnitude > b.magnitude; });

  RMatrix p(r, r);
  Eigen::Index col = 0;
  for (const auto* group : {&zero_blocks, &pair_blocks}) {
    for (const auto& b : *group) {
      for (const auto c : b.cols) p.col(col++) = q.col(c);
    }
  }

  SplitForm out;
  out.r_c = static_cast<Eigen::Index>(zero_blocks.size());
  out.r_q = r - out.r_c;
  out.transform = w * p;
  const CMatrix transformed = out.transform.transpose().cast<cplx>() * sigma * out.transform.cast<cplx>();
  out.sigma_c = transformed.topLeftCorner(out.r_c, out.r_c).real();
  out.sigma_q = transformed.bottomRightCorner(out.r_q, out.r_q);
  CMatrix block = CMatrix::Zero(r, r);
  block.topLeftCorner(out.r_c, out.r_c) = out.sigma_c.cast<cplx>();
  block.bottomRightCorner(out.r_q, out.r_q) = out.sigma_q;
  out.residual = max_abs(transformed - block);
  Eigen::JacobiSVD<RMatrix> svd(out.transform);
  out.condition_number = svd.singularValues()(0) / svd.singularValues()(r - 1);
  return out;
}

}  // namespace qasym
