#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lsft {

/// Row-major C×n storage: row i holds every spatial sample of channel i.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for dimension mismatches and malformed arguments.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces or meets values it cannot handle
/// (non-finite entries, singular whitening, a cubic without a positive root).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A C×n matrix of feature activations (channels × flattened spatial samples).
///
/// Every entry is finite; construction rejects NaN/Inf so that nothing
/// downstream has to guard traces against poisoned input.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(RowMatrix data);
  FeatureMatrix(std::size_t channels, std::size_t samples, std::span<const double> values);

  static FeatureMatrix zeros(std::size_t channels, std::size_t samples);

  std::size_t channels() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(data_.cols()); }
  const RowMatrix& mat() const { return data_; }
  double operator()(std::size_t c, std::size_t j) const {
    return data_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
  }
  double max_abs() const { return data_.size() == 0 ? 0.0 : data_.cwiseAbs().maxCoeff(); }

  RowMatrix release() && { return std::move(data_); }

 private:
  RowMatrix data_;
};

/// Per-channel mean μ(F) over the n sample columns.
class MeanVector {
 public:
  explicit MeanVector(Vector values) : values_(std::move(values)) {}
  static MeanVector zeros(std::size_t channels) {
    return MeanVector(Vector::Zero(static_cast<Eigen::Index>(channels)));
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const Vector& vec() const { return values_; }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

 private:
  Vector values_;
};

/// Symmetric C×C matrix (Gram matrices, covariances, the S term).
class SymMatrix {
 public:
  /// Checks symmetry to 1e-12 relative and finiteness.
  explicit SymMatrix(Matrix data);

  /// Averages the input with its transpose before storing it.
  static SymMatrix symmetrized(const Matrix& data);

  std::size_t order() const { return static_cast<std::size_t>(data_.rows()); }
  const Matrix& mat() const { return data_; }

 private:
  struct Trusted {};
  SymMatrix(Matrix data, Trusted) : data_(std::move(data)) {}
  friend SymMatrix gram(const FeatureMatrix&, std::size_t);
  friend SymMatrix gram_of(const RowMatrix&, std::size_t);

  Matrix data_;
};

struct Centralized {
  FeatureMatrix matrix;
  MeanVector mean;
};

/// Flattens a C×H×W tensor given in row-major (C, then H, then W) order.
FeatureMatrix reshape_feature(std::size_t channels, std::size_t height, std::size_t width,
                              std::span<const double> tensor);

MeanVector mean_vector(const FeatureMatrix& f);

/// F̄ = F − μ(F), broadcast across samples.
Centralized centralize(const FeatureMatrix& f);

/// F̄ + μ, broadcast across samples.
FeatureMatrix decentralize(const FeatureMatrix& centered, const MeanVector& mean);

/// (1/divisor)·F·Fᵀ. The divisor is explicit because content and style
/// terms of the objective are normalized by their own sample counts.
SymMatrix gram(const FeatureMatrix& f, std::size_t divisor);

/// gram() on an unchecked matrix; used on hot paths where the operand is an
/// intermediate iterate rather than a validated feature.
SymMatrix gram_of(const RowMatrix& f, std::size_t divisor);

/// tr[A·B] = Σ_ij A_ij·B_ji without forming the product.
double trace_product(const Matrix& a, const Matrix& b);
inline double trace_product(const SymMatrix& a, const SymMatrix& b) {
  return trace_product(a.mat(), b.mat());
}

/// Sum of squared entries (squared Frobenius norm).
template <typename Derived>
double frobenius_sq(const Eigen::MatrixBase<Derived>& m) {
  return m.squaredNorm();
}
inline double frobenius_sq(const FeatureMatrix& f) { return f.mat().squaredNorm(); }
inline double frobenius_sq(const SymMatrix& s) { return s.mat().squaredNorm(); }

/// Throws ShapeError unless both features have the same channel count.
void require_same_channels(const FeatureMatrix& a, const FeatureMatrix& b, const char* what);
void require_same_shape(const FeatureMatrix& a, const FeatureMatrix& b, const char* what);

std::string shape_string(const FeatureMatrix& f);

}  // namespace lsft
