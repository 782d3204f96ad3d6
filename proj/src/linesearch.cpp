#include "lsft/linesearch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace lsft {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kLeadingTol = 1e-14;

double horner(double a, double b, double c, double d, double x) {
  return ((a * x + b) * x + c) * x + d;
}

double max_abs4(double a, double b, double c, double d) {
  return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
}

std::vector<double> solve_quadratic(double b, double c, double d) {
  const double lower = std::max(std::abs(c), std::abs(d));
  if (std::abs(b) <= kLeadingTol * lower) {
    if (c == 0.0) return {};
    return {-d / c};
  }
  double disc = c * c - 4.0 * b * d;
  if (disc < 0.0) {
    // Treat rounding-level negatives as a double root.
    if (disc < -1e-14 * c * c) return {};
    disc = 0.0;
  }
  const double q = -0.5 * (c + std::copysign(std::sqrt(disc), c));
  if (q == 0.0) return {0.0};
  return {q / b, d / q};
}

std::vector<double> solve_monic_cubic(double b, double c, double d) {
  const double shift = -b / 3.0;
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double half_q = 0.5 * q;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  std::vector<double> t;
  if (disc > 0.0) {
    const double u = -std::copysign(std::cbrt(std::abs(half_q) + std::sqrt(disc)), q);
    t.push_back(u == 0.0 ? 0.0 : u - p / (3.0 * u));
  } else if (p == 0.0) {
    t.push_back(std::cbrt(-q));
  } else {
    const double r = 2.0 * std::sqrt(-third_p);
    const double arg = std::clamp((3.0 * q / (2.0 * p)) * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) t.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0));
  }
  for (double& x : t) x += shift;
  return t;
}

double newton_polish(double a, double b, double c, double d, double x) {
  const double f = horner(a, b, c, d, x);
  const double df = (3.0 * a * x + 2.0 * b) * x + c;
  if (df == 0.0 || !std::isfinite(df)) return x;
  const double candidate = x - f / df;
  if (std::isfinite(candidate) &&
      std::abs(horner(a, b, c, d, candidate)) <= std::abs(f)) {
    return candidate;
  }
  return x;
}

}  // namespace

std::string CubicCoefficients::describe() const {
  std::ostringstream os;
  os << std::setprecision(17) << "a=" << a << " b=" << b << " c=" << c << " d=" << d
     << " tr[D2]=" << tr_D2 << " tr[D2D2]=" << tr_D2D2 << " tr[DF D2]=" << tr_DF_D2
     << " tr[D2 S]=" << tr_D2S << " tr[DF DF]=" << tr_DFDF << " tr[DF DF^T]=" << tr_DFDFt;
  return os.str();
}

std::vector<double> solve_cubic(double a, double b, double c, double d, double tol) {
  const double scale = max_abs4(a, b, c, d);
  if (scale == 0.0) {
    throw NumericalError("solve_cubic: degenerate gradient, all cubic coefficients are zero");
  }
  std::vector<double> roots;
  if (std::abs(a) <= kLeadingTol * std::max({std::abs(b), std::abs(c), std::abs(d)})) {
    roots = solve_quadratic(b, c, d);
  } else {
    roots = solve_monic_cubic(b / a, c / a, d / a);
  }
  for (double& r : roots) r = newton_polish(a, b, c, d, r);
  std::sort(roots.begin(), roots.end());
  // A double root is only resolved to about sqrt(eps), so near-equal roots merge.
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double x, double y) {
                            return std::abs(x - y) <= 1e-7 * (1.0 + std::abs(x));
                          }),
              roots.end());

  for (double r : roots) {
    const double residual = std::abs(horner(a, b, c, d, r));
    const double r3 = std::abs(r) * std::abs(r) * std::abs(r);
    if (!(residual <= tol * scale * (1.0 + r3))) {
      std::ostringstream os;
      os << std::setprecision(17) << "solve_cubic: root " << r << " has residual " << residual
         << " for coefficients (" << a << ", " << b << ", " << c << ", " << d << ")";
      throw NumericalError(os.str());
    }
  }
  return roots;
}

std::vector<double> solve_cubic(const CubicCoefficients& k, double tol) {
  return solve_cubic(k.a, k.b, k.c, k.d, tol);
}

StepResult select_step(const std::vector<double>& roots,
                       const std::function<double(double)>& phi) {
  StepResult out;
  out.real_roots = roots;
  for (double r : roots)
    if (r > 0.0) out.positive_roots_considered.push_back(r);
  if (out.positive_roots_considered.empty()) {
    std::ostringstream os;
    os << std::setprecision(17) << "select_step: no positive root among {";
    for (std::size_t i = 0; i < roots.size(); ++i) os << (i ? ", " : "") << roots[i];
    os << "}";
    throw NumericalError(os.str());
  }
  out.phi_before = phi(0.0);
  out.phi_after = std::numeric_limits<double>::infinity();
  for (double r : out.positive_roots_considered) {
    const double value = phi(r);
    if (value < out.phi_after) {
      out.phi_after = value;
      out.eta = r;
    }
  }
  return out;
}

LineModel::LineModel(const RowMatrix& d, const RowMatrix& ft, const RowMatrix& fc,
                     const Matrix& s, double lambda, std::size_t nc)
    : d2_(gram_of(d, 1).mat()),
      df_(d * ft.transpose()),
      s_(s),
      lambda_(lambda),
      nc_(static_cast<double>(nc)) {
  residual_sq_ = (ft - fc).squaredNorm();
  d_dot_residual_ = d.cwiseProduct(ft - fc).sum();

  CubicCoefficients& k = coeffs_;
  k.tr_D2 = d2_.trace();
  k.tr_D2D2 = trace_product(d2_, d2_);
  k.tr_DF_D2 = trace_product(df_, d2_);
  k.tr_D2S = trace_product(d2_, s_);
  k.tr_DFDF = trace_product(df_, df_);
  k.tr_DFDFt = df_.squaredNorm();

  const double n2 = nc_ * nc_;
  k.a = (2.0 * lambda_ / n2) * k.tr_D2D2;
  k.b = -(6.0 * lambda_ / n2) * k.tr_DF_D2;
  k.c = k.tr_D2 + (2.0 * lambda_ / nc_) * k.tr_D2S +
        (2.0 * lambda_ / n2) * (k.tr_DFDF + k.tr_DFDFt);
  k.d = -0.5 * k.tr_D2;
}

double LineModel::phi(double eta) const {
  const double content =
      residual_sq_ - 2.0 * eta * d_dot_residual_ + eta * eta * coeffs_.tr_D2;
  if (lambda_ == 0.0) return content;
  // gram(F̄t − ηD) − gram(F̄s) = S − (η(D_F + D_Fᵀ) − η²D₂)/n_c
  const Matrix b = s_ - (eta * (df_ + df_.transpose()) - eta * eta * d2_) / nc_;
  return content + lambda_ * b.squaredNorm();
}

CubicCoefficients cubic_coefficients(const RowMatrix& d, const RowMatrix& ft, const Matrix& s,
                                     double lambda, std::size_t nc) {
  // The residual terms of LineModel are irrelevant to the coefficients.
  return LineModel(d, ft, ft, s, lambda, nc).coefficients();
}

CubicCoefficients cubic_coefficients(const RowMatrix& d, const FeatureMatrix& ft,
                                     const SymMatrix& s, double lambda, std::size_t nc) {
  if (d.rows() != ft.mat().rows() || d.cols() != ft.mat().cols()) {
    throw ShapeError("cubic_coefficients: gradient and feature shapes differ");
  }
  if (s.order() != ft.channels()) {
    throw ShapeError("cubic_coefficients: S order differs from channel count");
  }
  return cubic_coefficients(d, ft.mat(), s.mat(), lambda, nc);
}

double phi(double eta, const FeatureMatrix& ft, const FeatureMatrix& fc, const FeatureMatrix& fs,
           const RowMatrix& d, double lambda) {
  if (d.rows() != ft.mat().rows() || d.cols() != ft.mat().cols()) {
    throw ShapeError("phi: gradient and feature shapes differ");
  }
  const FeatureMatrix moved(RowMatrix(ft.mat() - eta * d));
  return total_loss(moved, fc, fs, lambda).total;
}

LineSearchRun ls_ft_detailed(const FeatureMatrix& fc, const FeatureMatrix& fs,
                             const TransformConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  if (!std::holds_alternative<LineSearchEta>(cfg.eta_mode)) {
    throw ShapeError("ls_ft requires line-search step mode");
  }
  const detail::CenteredProblem p = detail::make_centered_problem(fc, fs, cfg);

  RowMatrix ft = detail::initial_iterate(p, cfg);
  LineSearchRun run{{FeatureMatrix::zeros(1, 1), {}}, {}};
  ConvergenceTrace& trace = run.result.trace;
  trace.method = "ls-ft";
  Matrix g = gram_of(ft, p.nc).mat();
  trace.initial = detail::loss_with_gram(ft, g, p.fc, p.style_gram, p.lambda);
  LossBreakdown current = trace.initial;

  const double fc_norm = p.fc.norm();
  const double degenerate = cfg.degenerate_grad_tol * (1.0 + fc_norm);
  const double stop = std::max(degenerate, cfg.convergence_grad_tol * fc_norm);
  Matrix s;
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    const auto t0 = Clock::now();
    RowMatrix d = detail::gradient_with_gram(ft, g, p.fc, p.style_gram, p.lambda, p.nc, s);
    const double d_norm = d.norm();
    if (d_norm <= (cfg.early_stop ? stop : degenerate)) {
      if (cfg.early_stop) break;
      // Stationary: record the unchanged loss without a step.
      trace.records.push_back({current, std::nullopt, Clock::now() - t0});
      continue;
    }

    const LineModel model(d, ft, p.fc, s, p.lambda, p.nc);
    StepResult step;
    try {
      step = select_step(solve_cubic(model.coefficients()),
                         [&model](double eta) { return model.phi(eta); });
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "ls_ft: iteration " << k << ": " << e.what() << " ["
         << model.coefficients().describe() << "]";
      throw NumericalError(os.str());
    }

    ft -= step.eta * d;
    if (cfg.recenter_each_step) detail::recenter(ft);
    g = gram_of(ft, p.nc).mat();
    current = detail::loss_with_gram(ft, g, p.fc, p.style_gram, p.lambda);
    if (!std::isfinite(current.total)) {
      throw NumericalError("ls_ft: loss became non-finite at iteration " + std::to_string(k));
    }
    trace.records.push_back({current, step.eta, Clock::now() - t0});
    run.steps.push_back(std::move(step));
    if (observer) observer(ft);
  }
  ft.colwise() += p.style_mean.vec();
  run.result.output = FeatureMatrix(std::move(ft));
  return run;
}

TransformResult ls_ft(const FeatureMatrix& fc, const FeatureMatrix& fs, const TransformConfig& cfg,
                      const IterateObserver& observer) {
  return std::move(ls_ft_detailed(fc, fs, cfg, observer).result);
}

}  // namespace lsft
