#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "lsft/classic.hpp"
#include "lsft/feature.hpp"
#include "lsft/iterative.hpp"
#include "lsft/trace.hpp"

namespace lsft {

// ---------------------------------------------------------------------------
// Synthetic features

struct UnitGaussian {};
/// Entries mean + sigma·z.
struct ScaledGaussian {
  double mean = 0.0;
  double sigma = 1.0;
};
/// F = A·B/√rank with A (C×rank) and B (rank×n) unit Gaussian; A draws
/// normal indices [0, C·rank), B continues from there.
struct LowRank {
  std::size_t rank = 1;
};
using FeatureDist = std::variant<UnitGaussian, ScaledGaussian, LowRank>;

/// Deterministic synthetic features. Entry (i, j) of the Gaussian kinds is
/// normal draw i·n + j of CounterRng(seed).
FeatureMatrix gen_features(std::uint64_t seed, std::size_t channels, std::size_t samples,
                           const FeatureDist& dist);

/// Parses "unit-gaussian", "scaled-gaussian:MEAN:SIGMA", "low-rank:R".
FeatureDist parse_dist(std::string_view text);
std::string dist_name(const FeatureDist& dist);

struct FeaturePair {
  FeatureMatrix content;
  FeatureMatrix style;
  std::uint64_t seed = 0;
};

struct PairSpec {
  std::size_t channels = 64;
  std::size_t content_samples = 256;
  std::size_t style_samples = 256;
  FeatureDist content_dist = UnitGaussian{};
  FeatureDist style_dist = ScaledGaussian{0.5, 2.0};
};

/// Pair k uses derive_seed(seed, k) and its two sub-streams 0 (content) and
/// 1 (style).
FeaturePair make_pair(std::uint64_t seed, std::size_t index, const PairSpec& spec);
std::vector<FeaturePair> make_pairs(std::uint64_t seed, std::size_t count, const PairSpec& spec);

// ---------------------------------------------------------------------------
// Methods

enum class Method { AdaIN, AdaINAblated, Zca, ZcaGram, Interp, IterFT, ModifiedIterFT, LsFT };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);
bool is_iterative(Method m);

struct MethodOptions {
  TransformConfig config;
  ZcaOptions zca;
  /// Interp: weight of the ZCA output against the content feature.
  double beta = 1.0;
};

/// Default config per method: line search with one iteration for ls-ft,
/// fixed η = 0.01 and 15 iterations for the other iterative methods.
MethodOptions default_options(Method m, double alpha = 1.0);

/// Runs any transformation. Closed-form methods return an empty trace.
TransformResult run_method(Method m, const FeatureMatrix& content, const FeatureMatrix& style,
                           const MethodOptions& opts);

// ---------------------------------------------------------------------------
// Convergence (loss-vs-iteration) experiments

/// One trace per pair with exactly `iterations` records. Early stopping is
/// disabled; a run that throws is kept with its error message and the records
/// it completed. Pairs run on worker threads (see worker_count()).
std::vector<ConvergenceTrace> convergence_experiment(const std::vector<FeaturePair>& pairs,
                                                     Method method, const MethodOptions& opts,
                                                     std::size_t iterations);

struct AggregateCurve {
  std::vector<double> mean;
  std::vector<double> std_dev;  // population standard deviation
  std::size_t trials = 0;
};

/// Pointwise mean and population standard deviation of the per-iteration
/// totals. Throws ShapeError for empty input or ragged traces.
AggregateCurve aggregate_traces(const std::vector<ConvergenceTrace>& traces);

// ---------------------------------------------------------------------------
// Content/style balance

struct BalanceLosses {
  double content = 0.0;
  double style = 0.0;
};

/// Single-layer losses: ‖F̄sty − F̄c‖² and ‖gram(F̄sty) − gram(F̄s)‖².
BalanceLosses pair_losses(const FeatureMatrix& stylized, const FeatureMatrix& content,
                          const FeatureMatrix& style);

/// Multi-layer losses over the four levels, in cascade order
/// (relu4_1, relu3_1, relu2_1, relu1_1). Content loss uses relu4_1 only;
/// style loss sums every level. Throws ShapeError unless all three lists
/// hold exactly four layers.
BalanceLosses content_style_losses(const std::vector<FeatureMatrix>& stylized,
                                   const std::vector<FeatureMatrix>& content,
                                   const std::vector<FeatureMatrix>& style);

struct BalancePoint {
  double alpha = 0.0;
  double mean_content_loss = 0.0;
  double mean_style_loss = 0.0;
};

/// Mean single-layer losses across pairs for each α.
std::vector<BalancePoint> alpha_sweep(const std::vector<FeaturePair>& pairs, Method method,
                                      const std::vector<double>& alphas,
                                      const MethodOptions& base = {});

/// α presets per model: {wct2, photowct, photowct2, pca-d}.
double alpha_preset(std::string_view model, Method method);

// ---------------------------------------------------------------------------
// Multi-layer schedules

struct SeedSource {
  std::uint64_t seed = 0;
  FeatureDist content_dist = UnitGaussian{};
  FeatureDist style_dist = ScaledGaussian{0.5, 2.0};
};
struct FileSource {
  std::string content_path;
  std::string style_path;
};

struct LayerSpec {
  std::string label;
  std::size_t channels = 0;
  std::size_t content_samples = 0;
  std::size_t style_samples = 0;
  std::variant<SeedSource, FileSource> source;
};

/// Ordered like the decoder cascade: deepest layer (relu4_1) first.
struct LayerSchedule {
  std::vector<LayerSpec> layers;

  void validate() const;

  /// "vgg": widths 64/128/256/512 with spatial size halved per level from a
  /// 64×64 relu1_1 map. "fig4": the same widths with n = 4·C samples.
  /// "tiny": widths divided by 16 with n = 8·C, for smoke runs.
  static LayerSchedule preset(std::string_view name, std::uint64_t seed);
};

struct LayerOutcome {
  std::string label;
  FeatureMatrix content;
  FeatureMatrix style;
  FeatureMatrix output;
  ConvergenceTrace trace;
};

struct ScheduleRun {
  std::vector<LayerOutcome> layers;
  /// Present when the schedule has the four standard levels.
  std::optional<BalanceLosses> losses;
};

/// Transforms each layer pair independently, in schedule order. There is no
/// decoder between levels, so each layer sees its own (content, style) pair.
ScheduleRun layer_schedule_run(const LayerSchedule& schedule, Method method,
                               const MethodOptions& opts);

// ---------------------------------------------------------------------------
// Timing and step-size statistics

struct TimingShape {
  std::string label;
  std::size_t channels = 64;
  std::size_t samples = 0;
};

/// "hd", "fhd", "qhd", "uhd": C = 64 with n = width·height/16. "all" is the
/// four of them; "tiny" is a 16×256 smoke shape.
std::vector<TimingShape> timing_shapes(std::string_view preset);

struct TimingRow {
  std::string shape;
  std::size_t channels = 0;
  std::size_t samples = 0;
  std::string method;
  double median_seconds = 0.0;
  std::size_t repeats = 0;
};

/// Median wall time of each method on each shape over `repeats` timed runs,
/// after 2 untimed warm-up runs. Runs sequentially.
std::vector<TimingRow> timing_bench(const std::vector<TimingShape>& shapes,
                                    const std::vector<std::pair<Method, MethodOptions>>& methods,
                                    std::size_t repeats, std::uint64_t seed);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

/// 40 equal bins over [0, max η] of every recorded step size.
/// Throws ShapeError when no trace carries a step size.
Histogram eta_histogram(const std::vector<ConvergenceTrace>& traces, std::size_t bins = 40);

/// Worker threads for trial fan-out: $LSFT_THREADS if set, else the
/// hardware concurrency.
std::size_t worker_count();

}  // namespace lsft
