#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include "lsft/feature.hpp"
#include "lsft/trace.hpp"

namespace lsft {

struct ExplicitLambda {
  double value = 0.0;
};
/// λ = alpha·‖F̄c‖² / ‖(1/n_s)F̄sF̄sᵀ‖², see resolve_lambda.
struct AutoLambda {
  double alpha = 1.0;
};
using LambdaMode = std::variant<ExplicitLambda, AutoLambda>;

struct FixedEta {
  double value = 0.01;
};
struct LineSearchEta {};
using EtaMode = std::variant<FixedEta, LineSearchEta>;

/// Seeded noise added to the initial iterate. For the centered methods the
/// noise is itself centered so the zero-mean constraint still holds.
struct Perturbation {
  std::uint64_t seed = 0;
  double scale = 0.1;
};

struct TransformConfig {
  LambdaMode lambda_mode = AutoLambda{};
  EtaMode eta_mode = FixedEta{};
  std::size_t iterations = 15;
  /// Subtract μ(F̄t) after every step. Mathematically a no-op on centered
  /// iterates; kept switchable so that can be checked.
  bool recenter_each_step = true;
  /// Stop when ‖D‖_F ≤ convergence_grad_tol·‖F̄c‖_F (only if early_stop).
  double convergence_grad_tol = 1e-12;
  bool early_stop = true;
  /// Line search skips the step when ‖D‖_F ≤ degenerate_grad_tol·(1 + ‖F̄c‖_F);
  /// the cubic collapses to 0 = 0 there.
  double degenerate_grad_tol = 1e-10;
  std::optional<Perturbation> perturbation;

  /// Throws ShapeError on negative λ/α, non-positive fixed η or negative tolerances.
  void validate() const;

  /// η = 0.01, 15 iterations, α = 1.
  static TransformConfig fixed_step(double alpha = 1.0);
  /// Exact line search, one iteration, α = 1.
  static TransformConfig line_search(double alpha = 1.0);
};

/// Gradient of the objective at F̄t plus the S term it was built from.
struct GradientBundle {
  RowMatrix d;
  SymMatrix s;
};

/// Objective ‖F̄t − F̄c‖² + λ‖gram(F̄t, n_c) − gram(F̄s, n_s)‖².
LossBreakdown total_loss(const FeatureMatrix& ft, const FeatureMatrix& fc, const FeatureMatrix& fs,
                         double lambda);

/// D = 2(F̄t − F̄c) + (4λ/n_c)·S·F̄t, S = gram(F̄t, n_c) − gram(F̄s, n_s).
GradientBundle gradient(const FeatureMatrix& ft, const FeatureMatrix& fc, const FeatureMatrix& fs,
                        double lambda);

/// λ = α·frobenius_sq(F̄c)/frobenius_sq(gram(F̄s, n_s)).
/// Throws NumericalError when the style Gram matrix is zero.
double resolve_lambda(const FeatureMatrix& fc, const FeatureMatrix& fs, double alpha);

/// λ implied by the config for this pair.
double lambda_for(const TransformConfig& cfg, const FeatureMatrix& fc, const FeatureMatrix& fs);

struct TransformResult {
  FeatureMatrix output;
  ConvergenceTrace trace;
};

/// Original IterFT: fixed-step descent on raw (uncentered) features starting
/// from Fc. Throws NumericalError naming the iteration if the loss stops
/// being finite.
TransformResult iterft(const FeatureMatrix& fc, const FeatureMatrix& fs, const TransformConfig& cfg);

/// Called with every centered iterate after its update.
using IterateObserver = std::function<void(const RowMatrix& iterate)>;

/// IterFT with centralization before and decentralization (by μ(Fs)) after.
TransformResult modified_iterft(const FeatureMatrix& fc, const FeatureMatrix& fs,
                                const TransformConfig& cfg, const IterateObserver& observer = {});

namespace detail {

/// Working state shared by the centered descent methods.
struct CenteredProblem {
  RowMatrix fc;          // F̄c
  RowMatrix fs;          // F̄s
  MeanVector style_mean; // μ(Fs)
  Matrix style_gram;     // gram(F̄s, n_s)
  double lambda = 0.0;
  std::size_t nc = 0;
};

CenteredProblem make_centered_problem(const FeatureMatrix& fc, const FeatureMatrix& fs,
                                      const TransformConfig& cfg);

/// Initial F̄t: F̄c, plus centered noise when cfg.perturbation is set.
RowMatrix initial_iterate(const CenteredProblem& p, const TransformConfig& cfg);

/// Loss at ft given its Gram matrix (already divided by n_c).
LossBreakdown loss_with_gram(const RowMatrix& ft, const Matrix& ft_gram, const RowMatrix& fc,
                             const Matrix& style_gram, double lambda);

/// Gradient given the Gram matrix of ft. Returns D and writes S.
RowMatrix gradient_with_gram(const RowMatrix& ft, const Matrix& ft_gram, const RowMatrix& fc,
                             const Matrix& style_gram, double lambda, std::size_t nc, Matrix& s);

void recenter(RowMatrix& ft);

}  // namespace detail

}  // namespace lsft
