#include "lsft/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "lsft/ftz.hpp"
#include "lsft/linesearch.hpp"
#include "lsft/random.hpp"

namespace lsft {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ShapeError("cannot parse " + std::string(what) + " from '" + s + "'");
  }
  return v;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::size_t worker_count() {
  if (const char* env = std::getenv("LSFT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// --- synthetic features ------------------------------------------------------

FeatureMatrix gen_features(std::uint64_t seed, std::size_t channels, std::size_t samples,
                           const FeatureDist& dist) {
  if (channels < 1 || samples < 1) throw ShapeError("gen_features: empty shape");
  const CounterRng rng(seed);
  const auto c = static_cast<Eigen::Index>(channels);
  const auto n = static_cast<Eigen::Index>(samples);

  if (const auto* lr = std::get_if<LowRank>(&dist)) {
    if (lr->rank < 1 || lr->rank > channels) {
      throw ShapeError("gen_features: low-rank rank must be in [1, channels]");
    }
    const auto r = static_cast<Eigen::Index>(lr->rank);
    Matrix a(c, r);
    RowMatrix b(r, n);
    for (Eigen::Index i = 0; i < c; ++i)
      for (Eigen::Index k = 0; k < r; ++k) a(i, k) = rng.normal(static_cast<std::uint64_t>(i * r + k));
    const auto offset = static_cast<std::uint64_t>(c * r);
    for (Eigen::Index k = 0; k < r; ++k)
      for (Eigen::Index j = 0; j < n; ++j)
        b(k, j) = rng.normal(offset + static_cast<std::uint64_t>(k * n + j));
    return FeatureMatrix(RowMatrix((a * b) / std::sqrt(static_cast<double>(r))));
  }

  double mean = 0.0;
  double sigma = 1.0;
  if (const auto* sg = std::get_if<ScaledGaussian>(&dist)) {
    if (!(sg->sigma >= 0.0)) throw ShapeError("gen_features: sigma must be non-negative");
    mean = sg->mean;
    sigma = sg->sigma;
  }
  // Row-major storage puts draw k at data()[k].
  RowMatrix m(c, n);
  double* out = m.data();
  const auto total = static_cast<std::uint64_t>(c * n);
  for (std::uint64_t k = 0; k + 1 < total; k += 2) {
    const auto [even, odd] = rng.normal_pair(k / 2);
    out[k] = mean + sigma * even;
    out[k + 1] = mean + sigma * odd;
  }
  if (total % 2 == 1) out[total - 1] = mean + sigma * rng.normal(total - 1);
  return FeatureMatrix(std::move(m));
}

FeatureDist parse_dist(std::string_view text) {
  if (text == "unit-gaussian") return UnitGaussian{};
  if (text.starts_with("scaled-gaussian")) {
    ScaledGaussian sg;
    std::string_view rest = text.substr(std::string_view("scaled-gaussian").size());
    if (!rest.empty()) {
      if (rest.front() != ':') throw ShapeError("bad distribution '" + std::string(text) + "'");
      rest.remove_prefix(1);
      const auto colon = rest.find(':');
      if (colon == std::string_view::npos) {
        throw ShapeError("scaled-gaussian needs MEAN:SIGMA, got '" + std::string(text) + "'");
      }
      sg.mean = parse_double(rest.substr(0, colon), "mean");
      sg.sigma = parse_double(rest.substr(colon + 1), "sigma");
    }
    return sg;
  }
  if (text.starts_with("low-rank:")) {
    const double r = parse_double(text.substr(9), "rank");
    if (r < 1 || r != std::floor(r)) throw ShapeError("low-rank rank must be a positive integer");
    return LowRank{static_cast<std::size_t>(r)};
  }
  throw ShapeError("unknown distribution '" + std::string(text) +
                   "' (expected unit-gaussian, scaled-gaussian:MEAN:SIGMA or low-rank:R)");
}

std::string dist_name(const FeatureDist& dist) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UnitGaussian>) {
          os << "unit-gaussian";
        } else if constexpr (std::is_same_v<T, ScaledGaussian>) {
          os << "scaled-gaussian:" << d.mean << ":" << d.sigma;
        } else {
          os << "low-rank:" << d.rank;
        }
      },
      dist);
  return os.str();
}

FeaturePair make_pair(std::uint64_t seed, std::size_t index, const PairSpec& spec) {
  const std::uint64_t pair_seed = derive_seed(seed, index);
  return {gen_features(derive_seed(pair_seed, 0), spec.channels, spec.content_samples,
                       spec.content_dist),
          gen_features(derive_seed(pair_seed, 1), spec.channels, spec.style_samples,
                       spec.style_dist),
          pair_seed};
}

std::vector<FeaturePair> make_pairs(std::uint64_t seed, std::size_t count, const PairSpec& spec) {
  std::vector<FeaturePair> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) pairs.push_back(make_pair(seed, k, spec));
  return pairs;
}

// --- methods -----------------------------------------------------------------

namespace {
struct MethodEntry {
  Method method;
  std::string_view name;
};
constexpr MethodEntry kMethods[] = {
    {Method::AdaIN, "adain"},       {Method::AdaINAblated, "adain-ablated"},
    {Method::Zca, "zca"},           {Method::ZcaGram, "zca-gram"},
    {Method::Interp, "interp"},     {Method::IterFT, "iterft"},
    {Method::ModifiedIterFT, "m-iterft"}, {Method::LsFT, "ls-ft"},
};
}  // namespace

Method parse_method(std::string_view name) {
  for (const auto& e : kMethods)
    if (e.name == name) return e.method;
  throw ShapeError("unknown method '" + std::string(name) +
                   "' (expected adain, adain-ablated, zca, zca-gram, interp, iterft, m-iterft, "
                   "ls-ft)");
}

std::string_view method_name(Method m) {
  for (const auto& e : kMethods)
    if (e.method == m) return e.name;
  return "unknown";
}

bool is_iterative(Method m) {
  return m == Method::IterFT || m == Method::ModifiedIterFT || m == Method::LsFT;
}

MethodOptions default_options(Method m, double alpha) {
  MethodOptions opts;
  opts.config = m == Method::LsFT ? TransformConfig::line_search(alpha)
                                  : TransformConfig::fixed_step(alpha);
  return opts;
}

TransformResult run_method(Method m, const FeatureMatrix& content, const FeatureMatrix& style,
                           const MethodOptions& opts) {
  auto closed_form = [&](FeatureMatrix out) {
    ConvergenceTrace trace;
    trace.method = std::string(method_name(m));
    return TransformResult{std::move(out), std::move(trace)};
  };
  switch (m) {
    case Method::AdaIN:
      return closed_form(adain(content, style, opts.zca));
    case Method::AdaINAblated:
      return closed_form(adain_ablated(content, style, opts.zca));
    case Method::Zca:
      return closed_form(zca(content, style, opts.zca));
    case Method::ZcaGram:
      return closed_form(zca_gram_ablated(content, style, opts.zca));
    case Method::Interp:
      return closed_form(interpolate(zca(content, style, opts.zca), content, opts.beta));
    case Method::IterFT:
      return iterft(content, style, opts.config);
    case Method::ModifiedIterFT:
      return modified_iterft(content, style, opts.config);
    case Method::LsFT:
      return ls_ft(content, style, opts.config);
  }
  throw ShapeError("run_method: unhandled method");
}

// --- convergence ---------------------------------------------------------------

std::vector<ConvergenceTrace> convergence_experiment(const std::vector<FeaturePair>& pairs,
                                                     Method method, const MethodOptions& opts,
                                                     std::size_t iterations) {
  if (pairs.empty()) throw ShapeError("convergence_experiment: no pairs");
  if (!is_iterative(method)) {
    throw ShapeError("convergence_experiment: '" + std::string(method_name(method)) +
                     "' is not iterative");
  }
  MethodOptions run_opts = opts;
  run_opts.config.iterations = iterations;
  run_opts.config.early_stop = false;

  std::vector<ConvergenceTrace> traces(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    ConvergenceTrace& trace = traces[i];
    try {
      trace = run_method(method, pairs[i].content, pairs[i].style, run_opts).trace;
    } catch (const std::exception& e) {
      trace.method = std::string(method_name(method));
      trace.error = e.what();
    }
    trace.seed = pairs[i].seed;
  });
  return traces;
}

AggregateCurve aggregate_traces(const std::vector<ConvergenceTrace>& traces) {
  if (traces.empty()) throw ShapeError("aggregate_traces: no traces");
  const std::size_t len = traces.front().records.size();
  for (const auto& t : traces) {
    if (t.records.size() != len) {
      throw ShapeError("aggregate_traces: traces have different lengths (" +
                       std::to_string(len) + " vs " + std::to_string(t.records.size()) + ")");
    }
  }
  AggregateCurve curve;
  curve.trials = traces.size();
  curve.mean.assign(len, 0.0);
  curve.std_dev.assign(len, 0.0);
  const double count = static_cast<double>(traces.size());
  for (std::size_t k = 0; k < len; ++k) {
    double sum = 0.0;
    for (const auto& t : traces) sum += t.records[k].loss.total;
    const double mean = sum / count;
    double sq = 0.0;
    for (const auto& t : traces) {
      const double dev = t.records[k].loss.total - mean;
      sq += dev * dev;
    }
    curve.mean[k] = mean;
    curve.std_dev[k] = std::sqrt(sq / count);
  }
  return curve;
}

// --- balance ---------------------------------------------------------------------

BalanceLosses pair_losses(const FeatureMatrix& stylized, const FeatureMatrix& content,
                          const FeatureMatrix& style) {
  require_same_shape(stylized, content, "pair_losses");
  require_same_channels(stylized, style, "pair_losses");
  const Centralized sty = centralize(stylized);
  const Centralized c = centralize(content);
  const Centralized s = centralize(style);
  BalanceLosses out;
  out.content = frobenius_sq(sty.matrix.mat() - c.matrix.mat());
  out.style = frobenius_sq(gram(sty.matrix, stylized.samples()).mat() -
                           gram(s.matrix, style.samples()).mat());
  return out;
}

BalanceLosses content_style_losses(const std::vector<FeatureMatrix>& stylized,
                                   const std::vector<FeatureMatrix>& content,
                                   const std::vector<FeatureMatrix>& style) {
  constexpr std::size_t kLevels = 4;
  if (stylized.size() != kLevels || content.size() != kLevels || style.size() != kLevels) {
    std::ostringstream os;
    os << "content_style_losses: need " << kLevels << " layers each, got " << stylized.size()
       << " stylized, " << content.size() << " content, " << style.size() << " style";
    throw ShapeError(os.str());
  }
  BalanceLosses out;
  for (std::size_t level = 0; level < kLevels; ++level) {
    const BalanceLosses l = pair_losses(stylized[level], content[level], style[level]);
    if (level == 0) out.content = l.content;
    out.style += l.style;
  }
  return out;
}

std::vector<BalancePoint> alpha_sweep(const std::vector<FeaturePair>& pairs, Method method,
                                      const std::vector<double>& alphas,
                                      const MethodOptions& base) {
  if (alphas.empty()) throw ShapeError("alpha_sweep: no alpha values");
  if (pairs.empty()) throw ShapeError("alpha_sweep: no pairs");
  std::vector<BalancePoint> points;
  for (double alpha : alphas) {
    MethodOptions opts = base;
    opts.config.lambda_mode = AutoLambda{alpha};
    std::vector<BalanceLosses> losses(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
      const TransformResult r = run_method(method, pairs[i].content, pairs[i].style, opts);
      losses[i] = pair_losses(r.output, pairs[i].content, pairs[i].style);
    });
    BalancePoint p{alpha, 0.0, 0.0};
    for (const auto& l : losses) {
      p.mean_content_loss += l.content;
      p.mean_style_loss += l.style;
    }
    p.mean_content_loss /= static_cast<double>(pairs.size());
    p.mean_style_loss /= static_cast<double>(pairs.size());
    points.push_back(p);
  }
  return points;
}

double alpha_preset(std::string_view model, Method method) {
  struct Preset {
    std::string_view model;
    double line_search;
    double fixed_step;
  };
  static constexpr Preset kPresets[] = {
      {"wct2", 10.0, 50.0}, {"photowct", 0.2, 0.5}, {"photowct2", 1.0, 2.0}, {"pca-d", 200.0, 200.0}};
  if (method != Method::LsFT && method != Method::ModifiedIterFT && method != Method::IterFT) {
    throw ShapeError("alpha presets apply to ls-ft and m-iterft only");
  }
  for (const auto& p : kPresets) {
    if (p.model == model) return method == Method::LsFT ? p.line_search : p.fixed_step;
  }
  throw ShapeError("unknown alpha preset '" + std::string(model) +
                   "' (expected wct2, photowct, photowct2, pca-d)");
}

// --- schedules -------------------------------------------------------------------

void LayerSchedule::validate() const {
  if (layers.empty()) throw ShapeError("layer schedule is empty");
  for (const auto& l : layers) {
    if (l.channels < 1 || l.content_samples < 1 || l.style_samples < 1) {
      throw ShapeError("layer '" + l.label + "' has a zero dimension");
    }
  }
}

LayerSchedule LayerSchedule::preset(std::string_view name, std::uint64_t seed) {
  struct Level {
    const char* label;
    std::size_t channels;
    std::size_t side;  // content map side at this level in the "vgg" preset
  };
  static constexpr Level kLevels[] = {
      {"relu4_1", 512, 8}, {"relu3_1", 256, 16}, {"relu2_1", 128, 32}, {"relu1_1", 64, 64}};

  LayerSchedule s;
  for (std::size_t k = 0; k < 4; ++k) {
    const Level& lv = kLevels[k];
    LayerSpec spec;
    spec.label = lv.label;
    spec.channels = lv.channels;
    if (name == "vgg") {
      spec.content_samples = lv.side * lv.side;
      spec.style_samples = (lv.side * 3 / 4) * (lv.side * 3 / 4);
    } else if (name == "fig4") {
      spec.content_samples = 4 * lv.channels;
      spec.style_samples = 4 * lv.channels;
    } else if (name == "tiny") {
      spec.channels = lv.channels / 16;
      spec.content_samples = 8 * spec.channels;
      spec.style_samples = 8 * spec.channels;
    } else {
      throw ShapeError("unknown layer preset '" + std::string(name) +
                       "' (expected vgg, fig4, tiny)");
    }
    spec.source = SeedSource{derive_seed(seed, k)};
    s.layers.push_back(std::move(spec));
  }
  return s;
}

ScheduleRun layer_schedule_run(const LayerSchedule& schedule, Method method,
                               const MethodOptions& opts) {
  schedule.validate();
  ScheduleRun run;
  for (const LayerSpec& spec : schedule.layers) {
    try {
      FeatureMatrix content = FeatureMatrix::zeros(1, 1);
      FeatureMatrix style = FeatureMatrix::zeros(1, 1);
      std::uint64_t seed = 0;
      if (const auto* src = std::get_if<SeedSource>(&spec.source)) {
        content = gen_features(derive_seed(src->seed, 0), spec.channels, spec.content_samples,
                               src->content_dist);
        style = gen_features(derive_seed(src->seed, 1), spec.channels, spec.style_samples,
                             src->style_dist);
        seed = src->seed;
      } else {
        const auto& files = std::get<FileSource>(spec.source);
        content = read_ftz(files.content_path);
        style = read_ftz(files.style_path);
      }
      TransformResult r = run_method(method, content, style, opts);
      r.trace.layer = spec.label;
      r.trace.seed = seed;
      run.layers.push_back(
          {spec.label, std::move(content), std::move(style), std::move(r.output), std::move(r.trace)});
    } catch (const std::exception& e) {
      throw NumericalError("layer " + spec.label + ": " + e.what());
    }
  }
  if (run.layers.size() == 4) {
    std::vector<FeatureMatrix> sty, c, s;
    for (const auto& l : run.layers) {
      sty.push_back(l.output);
      c.push_back(l.content);
      s.push_back(l.style);
    }
    run.losses = content_style_losses(sty, c, s);
  }
  return run;
}

// --- timing and η statistics -------------------------------------------------------

std::vector<TimingShape> timing_shapes(std::string_view preset) {
  const TimingShape hd{"hd", 64, 1280 * 720 / 16};
  const TimingShape fhd{"fhd", 64, 1920 * 1080 / 16};
  const TimingShape qhd{"qhd", 64, 2560 * 1440 / 16};
  const TimingShape uhd{"uhd", 64, 3840 * 2160 / 16};
  if (preset == "hd") return {hd};
  if (preset == "fhd") return {fhd};
  if (preset == "qhd") return {qhd};
  if (preset == "uhd") return {uhd};
  if (preset == "all") return {hd, fhd, qhd, uhd};
  if (preset == "tiny") return {{"tiny", 16, 256}};
  throw ShapeError("unknown shape preset '" + std::string(preset) +
                   "' (expected hd, fhd, qhd, uhd, all, tiny)");
}

std::vector<TimingRow> timing_bench(const std::vector<TimingShape>& shapes,
                                    const std::vector<std::pair<Method, MethodOptions>>& methods,
                                    std::size_t repeats, std::uint64_t seed) {
  if (repeats < 3) throw ShapeError("timing_bench: repeats must be at least 3");
  constexpr int kWarmup = 2;
  std::vector<TimingRow> rows;
  for (std::size_t si = 0; si < shapes.size(); ++si) {
    const TimingShape& shape = shapes[si];
    PairSpec spec;
    spec.channels = shape.channels;
    spec.content_samples = shape.samples;
    spec.style_samples = shape.samples;
    const FeaturePair pair = make_pair(seed, si, spec);
    for (const auto& [method, opts] : methods) {
      for (int w = 0; w < kWarmup; ++w) run_method(method, pair.content, pair.style, opts);
      std::vector<double> times;
      for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        run_method(method, pair.content, pair.style, opts);
        times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
      rows.push_back({shape.label, shape.channels, shape.samples, std::string(method_name(method)),
                      median(times), repeats});
    }
  }
  return rows;
}

Histogram eta_histogram(const std::vector<ConvergenceTrace>& traces, std::size_t bins) {
  if (bins < 1) throw ShapeError("eta_histogram: need at least one bin");
  std::vector<double> etas;
  for (const auto& t : traces)
    for (const auto& r : t.records)
      if (r.eta) etas.push_back(*r.eta);
  if (etas.empty()) throw ShapeError("eta_histogram: no step sizes recorded");
  const double top = *std::max_element(etas.begin(), etas.end());
  for (double e : etas) {
    if (!(e > 0.0)) throw NumericalError("eta_histogram: non-positive step size " + std::to_string(e));
  }

  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(top * static_cast<double>(b) / static_cast<double>(bins));
  for (double e : etas) {
    auto b = static_cast<std::size_t>(e / top * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

}  // namespace lsft
