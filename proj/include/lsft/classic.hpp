#pragma once

#include "lsft/feature.hpp"

namespace lsft {

/// Eigen-decomposition of a symmetric matrix. Eigenvalues descend; column i
/// of `vectors` pairs with `values(i)`.
struct EigDecomposition {
  Vector values;
  Matrix vectors;
};

struct ZcaOptions {
  /// Eigenvalues are floored at eigen_clamp·tr(M)/C before taking powers.
  double eigen_clamp = 1e-8;
  /// Added to the content variance under the square root in AdaIN.
  double std_epsilon = 0.0;
};

/// Cyclic Jacobi eigensolver.
///
/// Sweeps the strict upper triangle in row order and stops once the
/// off-diagonal Frobenius norm falls to 1e-12 of the diagonal's. Each
/// eigenvector is sign-normalized so that its largest-magnitude component is
/// positive, which makes the output a pure function of the input.
///
/// Throws NumericalError if 100 sweeps do not converge.
EigDecomposition sym_eig(const SymMatrix& m);

/// V·diag(max(λ, clamp)^p)·Vᵀ with clamp = eigen_clamp·tr(M)/C.
/// Throws NumericalError for p < 0 when a clamped eigenvalue is still zero.
SymMatrix matrix_power_sym(const SymMatrix& m, double p, const ZcaOptions& opts = {});

/// Per-channel mean/std matching.
FeatureMatrix adain(const FeatureMatrix& content, const FeatureMatrix& style,
                    const ZcaOptions& opts = {});

/// AdaIN without centralization: per-channel root-mean-square matching, no
/// mean shift.
FeatureMatrix adain_ablated(const FeatureMatrix& content, const FeatureMatrix& style,
                            const ZcaOptions& opts = {});

/// Whitening-coloring: cov_s^{1/2}·cov_c^{-1/2}·F̄c + μs, with covariances
/// normalized by each feature's own sample count.
FeatureMatrix zca(const FeatureMatrix& content, const FeatureMatrix& style,
                  const ZcaOptions& opts = {});

/// ZCA on raw features: G_s^{1/2}·G_c^{-1/2}·Fc with G = (1/n)FFᵀ.
/// Matches Gram matrices but not means.
FeatureMatrix zca_gram_ablated(const FeatureMatrix& content, const FeatureMatrix& style,
                               const ZcaOptions& opts = {});

/// β·transformed + (1 − β)·base. β must lie in [0, 1].
FeatureMatrix interpolate(const FeatureMatrix& transformed, const FeatureMatrix& base,
                          double beta);

}  // namespace lsft
