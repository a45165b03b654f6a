#pragma once

// Dense complex-matrix kernels shared by every other module.
//
// Everything spectral goes through one Hermitian eigendecomposition; the
// matrices in this library are small (dim <= 256), so no Schur/Pade paths.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qasym {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// max_{j,k} |H_jk - conj(H_kj)|
double max_asymmetry(const CMatrix& h);
double max_abs(const CMatrix& m);

/// Entrywise comparison with an explicit absolute tolerance.
bool approx_equal(const CMatrix& a, const CMatrix& b, double atol);

/// (H + H*) / 2
CMatrix hermitian_part(const CMatrix& m);

/// Pauli matrices; index 0 is the identity, 1..3 are sigma_x, sigma_y, sigma_z.
CMatrix pauli(int index);

struct HermEig {
  RVector values;   // ascending
  CMatrix vectors;  // columns are eigenvectors, unitary
};

/// Eigendecomposition H = U diag(lambda) U*.
///
/// Throws ValidationError if H is not square or if its asymmetry exceeds
/// `tol * max(1, max|H|)`; the input is symmetrized before solving.
HermEig herm_eig(const CMatrix& h, double tol = 1e-12);

/// U diag(f(lambda)) U*
template <class F>
CMatrix spectral_apply(const HermEig& eig, F&& f) {
  const Eigen::Index n = eig.values.size();
  CVector fv(n);
  for (Eigen::Index i = 0; i < n; ++i) fv(i) = f(eig.values(i));
  return eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
}

enum class MatFn { Sqrt, Log, Exp, Abs, InvSqrt };

/// What to do with eigenvalues below the kernel cutoff for log / inv-sqrt.
enum class KernelPolicy {
  Reject,   // throw ValidationError naming the eigenvalue
  Exclude,  // treat as exact zero and map to 0 (pseudo-inverse convention)
};

struct FnOptions {
  /// Absolute cutoff; defaults to 1e-10 * (largest eigenvalue).
  std::optional<double> cutoff;
  KernelPolicy kernel = KernelPolicy::Reject;
};

/// f applied to the spectrum of a Hermitian matrix.
///
/// For Sqrt/Log/InvSqrt the spectrum must be >= -1e-12 (scaled by the largest
/// |eigenvalue| when that exceeds 1); small negative eigenvalues are clamped to 0.
CMatrix matrix_function(const CMatrix& h, MatFn f, const FnOptions& opts = {});

/// exp(i t H) for Hermitian H.
CMatrix unitary_exp(const CMatrix& h, double t = 1.0);

/// Operator geometric mean A#B of two PSD matrices.
///
/// When neither argument is well conditioned the result is the limit of
/// (A + eps I)#B, extrapolated in sqrt(eps) and accepted once two successive
/// extrapolants agree within 1e-8 (relative to the scale of the inputs).
CMatrix geometric_mean(const CMatrix& a, const CMatrix& b);

/// J#J^T for a PSD J with Re J > 0, via V^{1/2} (I + (V^{-1/2} S V^{-1/2})^2)^{1/2} V^{1/2}.
/// This also covers singular J (pure Gaussian covariances) exactly.
RMatrix geometric_mean_with_transpose(const CMatrix& j);

/// Sum of singular values.
double trace_norm(const CMatrix& a);

CMatrix kron(const CMatrix& a, const CMatrix& b);
/// a (x) a (x) ... (x) a, n factors.
CMatrix kron_power(const CMatrix& a, std::size_t n);

/// Partial trace of M acting on (x)_k C^{dims[k]}; returns the operator on the
/// kept factors (in their original order).
CMatrix partial_trace(const CMatrix& m, std::span<const std::size_t> dims,
                      std::span<const std::size_t> keep);

double min_eigenvalue(const CMatrix& h);

/// Hermitian PSD check: asymmetry and min eigenvalue within `tol` (relative to
/// max(1, max|H|)).
bool is_psd(const CMatrix& h, double tol = 1e-10);

}  // namespace qasym
