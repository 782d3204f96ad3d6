#include "lsft/iterative.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "lsft/random.hpp"

namespace lsft {

namespace {

using Clock = std::chrono::steady_clock;

double fixed_eta(const TransformConfig& cfg, const char* method) {
  const auto* fixed = std::get_if<FixedEta>(&cfg.eta_mode);
  if (fixed == nullptr) {
    throw ShapeError(std::string(method) + " needs a fixed learning rate, not line search");
  }
  return fixed->value;
}

void require_finite_loss(const LossBreakdown& loss, const char* method, std::size_t iteration) {
  if (!std::isfinite(loss.total)) {
    std::ostringstream os;
    os << method << ": loss became non-finite (" << loss.total << ") at iteration " << iteration;
    throw NumericalError(os.str());
  }
}

RowMatrix noise_like(const RowMatrix& like, const Perturbation& p) {
  const CounterRng rng(p.seed);
  const double rms = std::sqrt(like.squaredNorm() / static_cast<double>(like.size()));
  const double amplitude = p.scale * (rms > 0.0 ? rms : 1.0);
  RowMatrix noise(like.rows(), like.cols());
  for (Eigen::Index i = 0; i < noise.rows(); ++i)
    for (Eigen::Index j = 0; j < noise.cols(); ++j)
      noise(i, j) = amplitude * rng.normal(static_cast<std::uint64_t>(i * noise.cols() + j));
  return noise;
}

}  // namespace

void TransformConfig::validate() const {
  if (const auto* l = std::get_if<ExplicitLambda>(&lambda_mode); l && !(l->value >= 0.0)) {
    throw ShapeError("lambda must be non-negative");
  }
  if (const auto* a = std::get_if<AutoLambda>(&lambda_mode); a && !(a->alpha >= 0.0)) {
    throw ShapeError("alpha must be non-negative");
  }
  if (const auto* e = std::get_if<FixedEta>(&eta_mode); e && !(e->value > 0.0)) {
    throw ShapeError("fixed learning rate must be positive");
  }
  if (!(convergence_grad_tol >= 0.0) || !(degenerate_grad_tol >= 0.0)) {
    throw ShapeError("gradient tolerances must be non-negative");
  }
  if (perturbation && !(perturbation->scale >= 0.0)) {
    throw ShapeError("perturbation scale must be non-negative");
  }
}

TransformConfig TransformConfig::fixed_step(double alpha) {
  TransformConfig cfg;
  cfg.lambda_mode = AutoLambda{alpha};
  cfg.eta_mode = FixedEta{0.01};
  cfg.iterations = 15;
  return cfg;
}

TransformConfig TransformConfig::line_search(double alpha) {
  TransformConfig cfg;
  cfg.lambda_mode = AutoLambda{alpha};
  cfg.eta_mode = LineSearchEta{};
  cfg.iterations = 1;
  return cfg;
}

LossBreakdown total_loss(const FeatureMatrix& ft, const FeatureMatrix& fc, const FeatureMatrix& fs,
                         double lambda) {
  require_same_shape(ft, fc, "total_loss");
  require_same_channels(ft, fs, "total_loss");
  const SymMatrix gt = gram(ft, ft.samples());
  const SymMatrix gs = gram(fs, fs.samples());
  return detail::loss_with_gram(ft.mat(), gt.mat(), fc.mat(), gs.mat(), lambda);
}

GradientBundle gradient(const FeatureMatrix& ft, const FeatureMatrix& fc, const FeatureMatrix& fs,
                        double lambda) {
  require_same_shape(ft, fc, "gradient");
  require_same_channels(ft, fs, "gradient");
  const SymMatrix gt = gram(ft, ft.samples());
  const SymMatrix gs = gram(fs, fs.samples());
  Matrix s;
  RowMatrix d =
      detail::gradient_with_gram(ft.mat(), gt.mat(), fc.mat(), gs.mat(), lambda, ft.samples(), s);
  return {std::move(d), SymMatrix::symmetrized(s)};
}

namespace {

double lambda_from_scales(double alpha, double content_scale, double style_scale) {
  if (!(alpha >= 0.0)) throw ShapeError("alpha must be non-negative");
  if (style_scale == 0.0) {
    throw NumericalError("resolve_lambda: style Gram matrix is zero, lambda is undefined");
  }
  return alpha * content_scale / style_scale;
}

// Same as lambda_for, with the style Gram matrix already computed.
double lambda_with_gram(const TransformConfig& cfg, const RowMatrix& fc, const Matrix& style_gram) {
  if (const auto* l = std::get_if<ExplicitLambda>(&cfg.lambda_mode)) return l->value;
  const double alpha = std::get<AutoLambda>(cfg.lambda_mode).alpha;
  if (alpha == 0.0) return 0.0;
  return lambda_from_scales(alpha, fc.squaredNorm(), style_gram.squaredNorm());
}

}  // namespace

double resolve_lambda(const FeatureMatrix& fc, const FeatureMatrix& fs, double alpha) {
  require_same_channels(fc, fs, "resolve_lambda");
  return lambda_from_scales(alpha, frobenius_sq(fc), frobenius_sq(gram(fs, fs.samples())));
}

double lambda_for(const TransformConfig& cfg, const FeatureMatrix& fc, const FeatureMatrix& fs) {
  if (const auto* l = std::get_if<ExplicitLambda>(&cfg.lambda_mode)) return l->value;
  const double alpha = std::get<AutoLambda>(cfg.lambda_mode).alpha;
  // α = 0 means λ = 0 even for a degenerate style.
  if (alpha == 0.0) return 0.0;
  return resolve_lambda(fc, fs, alpha);
}

namespace detail {

CenteredProblem make_centered_problem(const FeatureMatrix& fc, const FeatureMatrix& fs,
                                      const TransformConfig& cfg) {
  require_same_channels(fc, fs, "transform");
  Centralized c = centralize(fc);
  Centralized s = centralize(fs);
  CenteredProblem p{c.matrix.mat(), s.matrix.mat(), std::move(s.mean), Matrix{}, 0.0,
                    fc.samples()};
  p.style_gram = gram(s.matrix, fs.samples()).mat();
  p.lambda = lambda_with_gram(cfg, p.fc, p.style_gram);
  return p;
}

RowMatrix initial_iterate(const CenteredProblem& p, const TransformConfig& cfg) {
  RowMatrix ft = p.fc;
  if (cfg.perturbation) {
    RowMatrix noise = noise_like(p.fc, *cfg.perturbation);
    recenter(noise);
    ft += noise;
  }
  return ft;
}

LossBreakdown loss_with_gram(const RowMatrix& ft, const Matrix& ft_gram, const RowMatrix& fc,
                             const Matrix& style_gram, double lambda) {
  LossBreakdown loss;
  loss.content_part = (ft - fc).squaredNorm();
  loss.style_part = (ft_gram - style_gram).squaredNorm();
  loss.lambda = lambda;
  loss.total = loss.content_part + lambda * loss.style_part;
  return loss;
}

RowMatrix gradient_with_gram(const RowMatrix& ft, const Matrix& ft_gram, const RowMatrix& fc,
                             const Matrix& style_gram, double lambda, std::size_t nc, Matrix& s) {
  s = ft_gram - style_gram;
  RowMatrix d = 2.0 * (ft - fc);
  if (lambda != 0.0) {
    const Matrix scaled = (4.0 * lambda / static_cast<double>(nc)) * s;
    d.noalias() += scaled * ft;
  }
  return d;
}

void recenter(RowMatrix& ft) {
  const Vector mu = ft.rowwise().mean();
  ft.colwise() -= mu;
}

}  // namespace detail

TransformResult iterft(const FeatureMatrix& fc, const FeatureMatrix& fs, const TransformConfig& cfg) {
  cfg.validate();
  require_same_channels(fc, fs, "iterft");
  const double eta = fixed_eta(cfg, "iterft");
  const double lambda = lambda_for(cfg, fc, fs);
  const std::size_t nc = fc.samples();
  const Matrix style_gram = gram(fs, fs.samples()).mat();

  RowMatrix ft = fc.mat();
  if (cfg.perturbation) ft += noise_like(fc.mat(), *cfg.perturbation);

  ConvergenceTrace trace;
  trace.method = "iterft";
  Matrix g = gram_of(ft, nc).mat();
  trace.initial = detail::loss_with_gram(ft, g, fc.mat(), style_gram, lambda);
  require_finite_loss(trace.initial, "iterft", 0);

  const double stop = cfg.convergence_grad_tol * fc.mat().norm();
  Matrix s;
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    const auto t0 = Clock::now();
    RowMatrix d = detail::gradient_with_gram(ft, g, fc.mat(), style_gram, lambda, nc, s);
    if (cfg.early_stop && d.norm() <= stop) break;
    ft -= eta * d;
    g = gram_of(ft, nc).mat();
    IterationRecord rec;
    rec.loss = detail::loss_with_gram(ft, g, fc.mat(), style_gram, lambda);
    require_finite_loss(rec.loss, "iterft", k);
    rec.eta = eta;
    rec.wall_time = Clock::now() - t0;
    trace.records.push_back(rec);
  }
  return {FeatureMatrix(std::move(ft)), std::move(trace)};
}

TransformResult modified_iterft(const FeatureMatrix& fc, const FeatureMatrix& fs,
                                const TransformConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  const double eta = fixed_eta(cfg, "modified_iterft");
  const detail::CenteredProblem p = detail::make_centered_problem(fc, fs, cfg);

  RowMatrix ft = detail::initial_iterate(p, cfg);
  ConvergenceTrace trace;
  trace.method = "m-iterft";
  Matrix g = gram_of(ft, p.nc).mat();
  trace.initial = detail::loss_with_gram(ft, g, p.fc, p.style_gram, p.lambda);

  const double stop = cfg.convergence_grad_tol * p.fc.norm();
  Matrix s;
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    const auto t0 = Clock::now();
    RowMatrix d = detail::gradient_with_gram(ft, g, p.fc, p.style_gram, p.lambda, p.nc, s);
    if (cfg.early_stop && d.norm() <= stop) break;
    // A zero gradient leaves the iterate as is; recentering would only add rounding.
    if (!d.isZero(0.0)) {
      ft -= eta * d;
      if (cfg.recenter_each_step) detail::recenter(ft);
      g = gram_of(ft, p.nc).mat();
    }
    IterationRecord rec;
    rec.loss = detail::loss_with_gram(ft, g, p.fc, p.style_gram, p.lambda);
    require_finite_loss(rec.loss, "modified_iterft", k);
    rec.eta = eta;
    rec.wall_time = Clock::now() - t0;
    trace.records.push_back(rec);
    if (observer) observer(ft);
  }
  ft.colwise() += p.style_mean.vec();
  return {FeatureMatrix(std::move(ft)), std::move(trace)};
}

}  // namespace lsft
