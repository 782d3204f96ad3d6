#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lsft/feature.hpp"
#include "lsft/iterative.hpp"

namespace lsft {

/// Coefficients of φ′(η)/2 = aη³ + bη² + cη + d for φ(η) = l(F̄t − ηD),
/// together with the traces they were assembled from
/// (D₂ = DDᵀ, D_F = DF̄tᵀ).
struct CubicCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double tr_D2 = 0.0;
  double tr_D2D2 = 0.0;
  double tr_DF_D2 = 0.0;
  double tr_D2S = 0.0;
  double tr_DFDF = 0.0;
  double tr_DFDFt = 0.0;

  std::string describe() const;
};

struct StepResult {
  double eta = 0.0;
  double phi_before = 0.0;
  double phi_after = 0.0;
  std::vector<double> real_roots;
  std::vector<double> positive_roots_considered;
};

/// The loss restricted to the ray F̄t − ηD. Holds D₂, D_F and S so that
/// evaluating φ costs O(C²) instead of a pass over the n samples.
class LineModel {
 public:
  LineModel(const RowMatrix& d, const RowMatrix& ft, const RowMatrix& fc, const Matrix& s,
            double lambda, std::size_t nc);

  const CubicCoefficients& coefficients() const { return coeffs_; }

  /// l(F̄t − ηD), expanded through the cached C×C matrices.
  double phi(double eta) const;

 private:
  Matrix d2_;
  Matrix df_;
  Matrix s_;
  double lambda_;
  double nc_;
  double residual_sq_;  // ‖F̄t − F̄c‖²
  double d_dot_residual_;
  CubicCoefficients coeffs_;
};

/// Builds the cubic for the step along −D from F̄t. D₂ and D_F are formed
/// once; every coefficient comes from traces of those and S.
CubicCoefficients cubic_coefficients(const RowMatrix& d, const RowMatrix& ft, const Matrix& s,
                                     double lambda, std::size_t nc);
CubicCoefficients cubic_coefficients(const RowMatrix& d, const FeatureMatrix& ft,
                                     const SymMatrix& s, double lambda, std::size_t nc);

/// φ(η) evaluated directly as total_loss(F̄t − ηD, F̄c, F̄s, λ).
double phi(double eta, const FeatureMatrix& ft, const FeatureMatrix& fc, const FeatureMatrix& fs,
           const RowMatrix& d, double lambda);

/// Real roots of aη³ + bη² + cη + d, ascending, duplicates collapsed.
///
/// Normalizes by the leading coefficient and solves the depressed cubic:
/// Cardano when the discriminant is positive (one real root), Viète's
/// trigonometric form otherwise. Each root gets one Newton polish. When
/// |a| ≤ 1e-14·max(|b|,|c|,|d|) the quadratic (or linear) equation is solved
/// instead. Throws NumericalError for all-zero coefficients, or if a root
/// misses |p(r)| ≤ tol·max|coef|·(1 + |r|³).
std::vector<double> solve_cubic(const CubicCoefficients& coeffs, double tol = 1e-9);
std::vector<double> solve_cubic(double a, double b, double c, double d, double tol = 1e-9);

/// Picks the positive root with the smallest φ. Throws NumericalError when
/// no root is positive.
StepResult select_step(const std::vector<double>& roots, const std::function<double(double)>& phi);

struct LineSearchRun {
  TransformResult result;
  std::vector<StepResult> steps;
};

/// Line-search feature transformation: centralize, take exact line-search
/// gradient steps on the centered objective, decentralize by μ(Fs).
TransformResult ls_ft(const FeatureMatrix& fc, const FeatureMatrix& fs, const TransformConfig& cfg,
                      const IterateObserver& observer = {});

/// ls_ft that also returns the per-iteration step details.
LineSearchRun ls_ft_detailed(const FeatureMatrix& fc, const FeatureMatrix& fs,
                             const TransformConfig& cfg, const IterateObserver& observer = {});

}  // namespace lsft
