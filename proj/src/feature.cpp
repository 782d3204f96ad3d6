#include "lsft/feature.hpp"

#include <cmath>
#include <sstream>

namespace lsft {

namespace {

void require_finite(const RowMatrix& m, const char* what) {
  if (!m.allFinite()) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (!std::isfinite(m(i, j))) {
          std::ostringstream os;
          os << what << ": non-finite entry " << m(i, j) << " at channel " << i << ", sample " << j;
          throw NumericalError(os.str());
        }
      }
    }
  }
}

}  // namespace

FeatureMatrix::FeatureMatrix(RowMatrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw ShapeError("feature matrix needs at least one channel and one sample");
  }
  require_finite(data_, "feature matrix");
}

FeatureMatrix::FeatureMatrix(std::size_t channels, std::size_t samples,
                             std::span<const double> values) {
  if (channels < 1 || samples < 1) {
    throw ShapeError("feature matrix needs at least one channel and one sample");
  }
  if (values.size() != channels * samples) {
    std::ostringstream os;
    os << "feature matrix " << channels << "x" << samples << " expects " << channels * samples
       << " values, got " << values.size();
    throw ShapeError(os.str());
  }
  data_ = Eigen::Map<const RowMatrix>(values.data(), static_cast<Eigen::Index>(channels),
                                      static_cast<Eigen::Index>(samples));
  require_finite(data_, "feature matrix");
}

FeatureMatrix FeatureMatrix::zeros(std::size_t channels, std::size_t samples) {
  return FeatureMatrix(RowMatrix::Zero(static_cast<Eigen::Index>(channels),
                                       static_cast<Eigen::Index>(samples)));
}

SymMatrix::SymMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() != data_.cols() || data_.rows() < 1) {
    throw ShapeError("symmetric matrix must be square and non-empty");
  }
  if (!data_.allFinite()) throw NumericalError("symmetric matrix has non-finite entries");
  const double scale = data_.cwiseAbs().maxCoeff();
  const double asym = (data_ - data_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream os;
    os << "matrix is not symmetric: max |M - M^T| = " << asym << " (scale " << scale << ")";
    throw ShapeError(os.str());
  }
}

SymMatrix SymMatrix::symmetrized(const Matrix& data) {
  if (data.rows() != data.cols()) throw ShapeError("symmetrized: matrix must be square");
  return SymMatrix(Matrix(0.5 * (data + data.transpose())));
}

FeatureMatrix reshape_feature(std::size_t channels, std::size_t height, std::size_t width,
                              std::span<const double> tensor) {
  if (channels < 1 || height < 1 || width < 1) {
    throw ShapeError("tensor dimensions must all be at least 1");
  }
  // A C×H×W row-major tensor already is C rows of H·W contiguous samples.
  return FeatureMatrix(channels, height * width, tensor);
}

MeanVector mean_vector(const FeatureMatrix& f) {
  return MeanVector(f.mat().rowwise().mean());
}

Centralized centralize(const FeatureMatrix& f) {
  MeanVector mu = mean_vector(f);
  RowMatrix centered = f.mat().colwise() - mu.vec();
  return {FeatureMatrix(std::move(centered)), std::move(mu)};
}

FeatureMatrix decentralize(const FeatureMatrix& centered, const MeanVector& mean) {
  if (mean.size() != centered.channels()) {
    std::ostringstream os;
    os << "decentralize: mean vector has " << mean.size() << " entries but feature has "
       << centered.channels() << " channels";
    throw ShapeError(os.str());
  }
  return FeatureMatrix(RowMatrix(centered.mat().colwise() + mean.vec()));
}

SymMatrix gram_of(const RowMatrix& f, std::size_t divisor) {
  if (divisor < 1) throw ShapeError("gram divisor must be at least 1");
  const Eigen::Index c = f.rows();
  Matrix g = Matrix::Zero(c, c);
  g.selfadjointView<Eigen::Lower>().rankUpdate(f, 1.0 / static_cast<double>(divisor));
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return SymMatrix(std::move(g), SymMatrix::Trusted{});
}

SymMatrix gram(const FeatureMatrix& f, std::size_t divisor) { return gram_of(f.mat(), divisor); }

double trace_product(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.cols() || a.cols() != b.rows()) {
    std::ostringstream os;
    os << "trace_product: incompatible orders " << a.rows() << "x" << a.cols() << " and "
       << b.rows() << "x" << b.cols();
    throw ShapeError(os.str());
  }
  return a.cwiseProduct(b.transpose()).sum();
}

void require_same_channels(const FeatureMatrix& a, const FeatureMatrix& b, const char* what) {
  if (a.channels() != b.channels()) {
    std::ostringstream os;
    os << what << ": channel mismatch (" << a.channels() << " vs " << b.channels() << ")";
    throw ShapeError(os.str());
  }
}

void require_same_shape(const FeatureMatrix& a, const FeatureMatrix& b, const char* what) {
  if (a.channels() != b.channels() || a.samples() != b.samples()) {
    std::ostringstream os;
    os << what << ": shape mismatch (" << shape_string(a) << " vs " << shape_string(b) << ")";
    throw ShapeError(os.str());
  }
}

std::string shape_string(const FeatureMatrix& f) {
  return std::to_string(f.channels()) + "x" + std::to_string(f.samples());
}

}  // namespace lsft
