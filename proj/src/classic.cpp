#include "lsft/classic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace lsft {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kJacobiTol = 1e-12;

double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
  return s;
}

// Whitening/coloring core shared by zca and its ablation: color·white·x.
RowMatrix whiten_color(const SymMatrix& content_stat, const SymMatrix& style_stat,
                       const RowMatrix& x, const ZcaOptions& opts) {
  const SymMatrix white = matrix_power_sym(content_stat, -0.5, opts);
  const SymMatrix color = matrix_power_sym(style_stat, 0.5, opts);
  const Matrix transfer = color.mat() * white.mat();
  return transfer * x;
}

}  // namespace

EigDecomposition sym_eig(const SymMatrix& m) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.order());
  Matrix a = m.mat();
  Matrix v = Matrix::Identity(n, n);

  int sweep = 0;
  double off = off_diagonal_sq(a);
  for (;; ++sweep) {
    const double diag = a.diagonal().squaredNorm();
    if (off <= kJacobiTol * kJacobiTol * diag || off == 0.0) break;
    if (sweep == kMaxSweeps) {
      std::ostringstream os;
      os << "sym_eig: no convergence after " << kMaxSweeps
         << " sweeps, off-diagonal residual " << std::sqrt(off) << " vs diagonal "
         << std::sqrt(diag);
      throw NumericalError(os.str());
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p,q) (Rutishauser's formulation).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = off_diagonal_sq(a);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  EigDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values(i) = a(src, src);
    Eigen::Index big = 0;
    v.col(src).cwiseAbs().maxCoeff(&big);
    out.vectors.col(i) = v(big, src) < 0.0 ? Vector(-v.col(src)) : Vector(v.col(src));
  }
  return out;
}

SymMatrix matrix_power_sym(const SymMatrix& m, double p, const ZcaOptions& opts) {
  if (opts.eigen_clamp < 0.0 || opts.std_epsilon < 0.0) {
    throw ShapeError("ZcaOptions: eigen_clamp and std_epsilon must be non-negative");
  }
  const EigDecomposition eig = sym_eig(m);
  const double c = static_cast<double>(m.order());
  const double floor = std::max(0.0, opts.eigen_clamp * m.mat().trace() / c);

  Vector powered(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double lambda = std::max({eig.values(i), floor, 0.0});
    if (p < 0.0 && lambda == 0.0) {
      std::ostringstream os;
      os << "matrix_power_sym: singular matrix cannot be raised to power " << p
         << " (eigenvalue " << eig.values(i) << " at index " << i << ", clamp floor " << floor
         << ")";
      throw NumericalError(os.str());
    }
    powered(i) = std::pow(lambda, p);
  }
  const Matrix result = eig.vectors * powered.asDiagonal() * eig.vectors.transpose();
  return SymMatrix::symmetrized(result);
}

FeatureMatrix adain(const FeatureMatrix& content, const FeatureMatrix& style,
                    const ZcaOptions& opts) {
  require_same_channels(content, style, "adain");
  if (opts.std_epsilon < 0.0) throw ShapeError("adain: std_epsilon must be non-negative");
  const Centralized c = centralize(content);
  const Centralized s = centralize(style);

  RowMatrix out(c.matrix.mat().rows(), c.matrix.mat().cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double var_c = c.matrix.mat().row(i).squaredNorm() / static_cast<double>(content.samples());
    const double var_s = s.matrix.mat().row(i).squaredNorm() / static_cast<double>(style.samples());
    const double denom = std::sqrt(var_c + opts.std_epsilon);
    // A flat content channel has nothing to rescale; it maps onto μs.
    const double scale = denom > 0.0 ? std::sqrt(var_s) / denom : 0.0;
    out.row(i) = (scale * c.matrix.mat().row(i)).array() + s.mean.vec()(i);
  }
  return FeatureMatrix(std::move(out));
}

FeatureMatrix adain_ablated(const FeatureMatrix& content, const FeatureMatrix& style,
                            const ZcaOptions& opts) {
  require_same_channels(content, style, "adain-ablated");
  if (opts.std_epsilon < 0.0) throw ShapeError("adain-ablated: std_epsilon must be non-negative");
  RowMatrix out(content.mat().rows(), content.mat().cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double ms_c = content.mat().row(i).squaredNorm() / static_cast<double>(content.samples());
    const double ms_s = style.mat().row(i).squaredNorm() / static_cast<double>(style.samples());
    const double denom = std::sqrt(ms_c + opts.std_epsilon);
    const double scale = denom > 0.0 ? std::sqrt(ms_s) / denom : 0.0;
    out.row(i) = scale * content.mat().row(i);
  }
  return FeatureMatrix(std::move(out));
}

FeatureMatrix zca(const FeatureMatrix& content, const FeatureMatrix& style,
                  const ZcaOptions& opts) {
  require_same_channels(content, style, "zca");
  const Centralized c = centralize(content);
  const Centralized s = centralize(style);
  const SymMatrix cov_c = gram(c.matrix, content.samples());
  const SymMatrix cov_s = gram(s.matrix, style.samples());
  RowMatrix colored = whiten_color(cov_c, cov_s, c.matrix.mat(), opts);
  return decentralize(FeatureMatrix(std::move(colored)), s.mean);
}

FeatureMatrix zca_gram_ablated(const FeatureMatrix& content, const FeatureMatrix& style,
                               const ZcaOptions& opts) {
  require_same_channels(content, style, "zca-gram");
  const SymMatrix g_c = gram(content, content.samples());
  const SymMatrix g_s = gram(style, style.samples());
  return FeatureMatrix(whiten_color(g_c, g_s, content.mat(), opts));
}

FeatureMatrix interpolate(const FeatureMatrix& transformed, const FeatureMatrix& base,
                          double beta) {
  require_same_shape(transformed, base, "interpolate");
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ShapeError("interpolate: beta must lie in [0, 1], got " + std::to_string(beta));
  }
  return FeatureMatrix(RowMatrix(beta * transformed.mat() + (1.0 - beta) * base.mat()));
}

}  // namespace lsft
