#include "lsft/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "lsft/ftz.hpp"
#include "lsft/harness.hpp"
#include "lsft/linesearch.hpp"
#include "lsft/random.hpp"
#include "lsft/report.hpp"

namespace lsft {

namespace {

namespace fs = std::filesystem;

struct CliError {
  std::string code;
  std::string message;
  int exit_code = 1;
};

[[noreturn]] void fail(std::string code, std::string message, int exit_code = 1) {
  throw CliError{std::move(code), std::move(message), exit_code};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) items.push_back(item);
  return items;
}

Method method_arg(const std::string& name) {
  try {
    return parse_method(name);
  } catch (const ShapeError& e) {
    fail("unknown-method", e.what());
  }
}

std::vector<Method> methods_arg(const std::string& list) {
  std::vector<Method> out;
  for (const auto& name : split_list(list)) out.push_back(method_arg(name));
  if (out.empty()) fail("usage", "--methods is empty", 2);
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  if (!fs::exists(path)) fail("missing-file", "no such file: " + path);
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("io", "cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

FtzDtype dtype_arg(const std::string& text) {
  if (text == "f32") return FtzDtype::Float32;
  if (text == "f64") return FtzDtype::Float64;
  fail("usage", "--dtype must be f32 or f64, got '" + text + "'", 2);
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail("io", "cannot create directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

/// Shared strength flags: --alpha, --lambda, --alpha-preset, mutually exclusive.
struct Strength {
  std::optional<double> alpha;
  std::optional<double> lambda;
  std::optional<std::string> preset;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--alpha", alpha, "content/style multiplier (lambda = alpha * ratio)");
    cmd.add_option("--lambda", lambda, "explicit style weight");
    cmd.add_option("--alpha-preset", preset, "wct2 | photowct | photowct2 | pca-d");
  }

  void check() const {
    const int given = (alpha ? 1 : 0) + (lambda ? 1 : 0) + (preset ? 1 : 0);
    if (given > 1) {
      fail("conflicting-options", "--alpha, --lambda and --alpha-preset are mutually exclusive");
    }
    if (alpha && !(*alpha >= 0.0)) fail("usage", "--alpha must be non-negative", 2);
    if (lambda && !(*lambda >= 0.0)) fail("usage", "--lambda must be non-negative", 2);
  }

  LambdaMode mode_for(Method m) const {
    if (lambda) return ExplicitLambda{*lambda};
    if (preset) {
      try {
        return AutoLambda{alpha_preset(*preset, m)};
      } catch (const ShapeError& e) {
        fail("usage", e.what(), 2);
      }
    }
    return AutoLambda{alpha.value_or(1.0)};
  }

  nlohmann::json to_json(Method m) const {
    const LambdaMode mode = mode_for(m);
    if (const auto* l = std::get_if<ExplicitLambda>(&mode)) return {{"lambda", l->value}};
    nlohmann::json j = {{"alpha", std::get<AutoLambda>(mode).alpha}};
    if (preset) j["alpha_preset"] = *preset;
    return j;
  }
};

nlohmann::json config_json(const MethodOptions& o) {
  nlohmann::json j;
  if (const auto* l = std::get_if<ExplicitLambda>(&o.config.lambda_mode)) {
    j["lambda"] = l->value;
  } else {
    j["alpha"] = std::get<AutoLambda>(o.config.lambda_mode).alpha;
  }
  if (const auto* e = std::get_if<FixedEta>(&o.config.eta_mode)) {
    j["eta"] = e->value;
  } else {
    j["eta"] = "line-search";
  }
  j["iterations"] = o.config.iterations;
  j["recenter_each_step"] = o.config.recenter_each_step;
  j["convergence_grad_tol"] = o.config.convergence_grad_tol;
  j["degenerate_grad_tol"] = o.config.degenerate_grad_tol;
  j["early_stop"] = o.config.early_stop;
  j["eigen_clamp"] = o.zca.eigen_clamp;
  j["std_epsilon"] = o.zca.std_epsilon;
  j["beta"] = o.beta;
  return j;
}

// --- gen --------------------------------------------------------------------------

struct GenArgs {
  std::uint64_t seed = 0;
  std::size_t channels = 64;
  std::size_t samples = 256;
  std::string dist = "unit-gaussian";
  std::string dtype = "f64";
  std::string out;
};

void run_gen(const GenArgs& a, std::ostream& out) {
  FeatureDist dist;
  try {
    dist = parse_dist(a.dist);
  } catch (const ShapeError& e) {
    fail("usage", e.what(), 2);
  }
  const FeatureMatrix f = gen_features(a.seed, a.channels, a.samples, dist);
  write_ftz(f, a.out, dtype_arg(a.dtype));
  out << "wrote " << a.out << " (" << shape_string(f) << ", " << dist_name(dist) << ", seed "
      << a.seed << ")\n";
}

// --- transform -----------------------------------------------------------------------

struct TransformArgs {
  std::string method;
  std::string content;
  std::string style;
  Strength strength;
  std::optional<double> eta;
  std::optional<std::size_t> iters;
  double beta = 1.0;
  bool no_recenter = false;
  std::optional<std::string> dtype;
  std::string out;
  std::optional<std::string> trace;
};

void run_transform(const TransformArgs& a, std::ostream& out) {
  const Method m = method_arg(a.method);
  a.strength.check();
  if (!is_iterative(m) && (a.strength.alpha || a.strength.lambda || a.strength.preset)) {
    fail("usage", "--alpha/--lambda only apply to iterft, m-iterft and ls-ft", 2);
  }
  if (m == Method::LsFT && a.eta) {
    fail("conflicting-options", "--eta fixes the step size; ls-ft chooses it by line search");
  }
  if (a.trace && !is_iterative(m)) {
    fail("usage", "--trace is only available for iterative methods", 2);
  }

  const std::vector<std::uint8_t> content_bytes = read_bytes(a.content);
  const std::vector<std::uint8_t> style_bytes = read_bytes(a.style);
  const FtzHeader content_header = parse_ftz_header(content_bytes);
  const FeatureMatrix content = decode_ftz(content_bytes);
  const FeatureMatrix style = decode_ftz(style_bytes);

  MethodOptions opts = default_options(m);
  if (is_iterative(m)) opts.config.lambda_mode = a.strength.mode_for(m);
  if (a.eta) opts.config.eta_mode = FixedEta{*a.eta};
  if (a.iters) opts.config.iterations = *a.iters;
  opts.config.recenter_each_step = !a.no_recenter;
  opts.beta = a.beta;

  TransformResult r = run_method(m, content, style, opts);
  const FtzDtype dtype = a.dtype ? dtype_arg(*a.dtype) : content_header.dtype;
  write_ftz(r.output, a.out, dtype);

  if (a.trace) {
    RunManifest manifest;
    manifest.method = std::string(method_name(m));
    manifest.config = config_json(opts);
    manifest.inputs = {a.content, a.style};
    r.trace.layer = "input";
    write_report_csv(traces_report({r.trace}, manifest), *a.trace);
  }
  out << "wrote " << a.out << " (" << method_name(m) << ", " << shape_string(r.output);
  if (!r.trace.records.empty()) {
    out << ", loss " << format_number(r.trace.initial.total) << " -> "
        << format_number(r.trace.final_loss()) << " in " << r.trace.records.size()
        << " iterations";
  }
  out << ")\n";
}

// --- converge ---------------------------------------------------------------------

struct ConvergeArgs {
  std::size_t pairs = 100;
  std::uint64_t seed = 0;
  std::string layers = "fig4";
  std::string methods = "m-iterft,ls-ft";
  std::size_t iters = 15;
  Strength strength;
  std::string content_dist = "unit-gaussian";
  std::string style_dist = "scaled-gaussian:0.5:2";
  std::string out;
};

void run_converge(const ConvergeArgs& a, std::ostream& out) {
  a.strength.check();
  const std::vector<Method> methods = methods_arg(a.methods);
  for (Method m : methods) {
    if (!is_iterative(m)) {
      fail("usage", "converge needs iterative methods, got '" + std::string(method_name(m)) + "'", 2);
    }
  }
  if (a.pairs < 1) fail("usage", "--pairs must be at least 1", 2);
  if (a.iters < 1) fail("usage", "--iters must be at least 1", 2);
  FeatureDist content_dist, style_dist;
  LayerSchedule schedule;
  try {
    content_dist = parse_dist(a.content_dist);
    style_dist = parse_dist(a.style_dist);
    schedule = LayerSchedule::preset(a.layers, a.seed);
  } catch (const ShapeError& e) {
    fail("usage", e.what(), 2);
  }
  const fs::path dir = ensure_dir(a.out);

  for (std::size_t li = 0; li < schedule.layers.size(); ++li) {
    const LayerSpec& layer = schedule.layers[li];
    PairSpec spec{layer.channels, layer.content_samples, layer.style_samples, content_dist,
                  style_dist};
    const std::uint64_t layer_seed = derive_seed(a.seed, li);
    const std::vector<FeaturePair> pairs = make_pairs(layer_seed, a.pairs, spec);

    std::vector<std::pair<Method, std::vector<ConvergenceTrace>>> results;
    for (Method m : methods) {
      MethodOptions opts = default_options(m);
      opts.config.lambda_mode = a.strength.mode_for(m);
      std::vector<ConvergenceTrace> traces = convergence_experiment(pairs, m, opts, a.iters);
      for (auto& t : traces) t.layer = layer.label;

      RunManifest manifest;
      manifest.method = std::string(method_name(m));
      manifest.config = config_json(opts);
      manifest.config["iterations"] = a.iters;
      manifest.config["layer"] = layer.label;
      manifest.config["channels"] = layer.channels;
      manifest.config["content_samples"] = layer.content_samples;
      manifest.config["style_samples"] = layer.style_samples;
      manifest.config["pairs"] = a.pairs;
      manifest.config["layers_preset"] = a.layers;
      manifest.seeds = {a.seed, layer_seed};
      manifest.inputs = {"gen:" + dist_name(content_dist), "gen:" + dist_name(style_dist)};

      const std::string stem = layer.label + "_" + std::string(method_name(m));
      write_report_csv(traces_report(traces, manifest), dir / (stem + "_traces.csv"));

      std::vector<ConvergenceTrace> ok;
      std::copy_if(traces.begin(), traces.end(), std::back_inserter(ok),
                   [](const ConvergenceTrace& t) { return t.ok(); });
      const std::size_t failed = traces.size() - ok.size();
      if (!ok.empty()) {
        const AggregateCurve curve = aggregate_traces(ok);
        manifest.config["failed_trials"] = failed;
        write_report_csv(convergence_report(curve, manifest), dir / (stem + ".csv"));
        out << layer.label << " " << method_name(m) << ": iteration 1 mean "
            << format_number(curve.mean.front()) << ", iteration " << a.iters << " mean "
            << format_number(curve.mean.back());
      } else {
        out << layer.label << " " << method_name(m) << ": all trials failed";
      }
      if (failed > 0) out << " (" << failed << " failed)";
      out << "\n";

      if (m == Method::LsFT && !ok.empty()) {
        try {
          write_report_csv(histogram_report(eta_histogram(ok), manifest),
                           dir / (stem + "_eta_hist.csv"));
        } catch (const ShapeError&) {
          // Every run was stationary; there is no step size to histogram.
        }
      }
      results.emplace_back(m, std::move(traces));
    }

    // Headline comparison: line search after one step vs fixed step after all steps.
    const auto find = [&](Method m) -> const std::vector<ConvergenceTrace>* {
      for (const auto& [method, traces] : results)
        if (method == m) return &traces;
      return nullptr;
    };
    const auto* ls = find(Method::LsFT);
    const auto* fixed = find(Method::ModifiedIterFT);
    if (ls && fixed) {
      std::size_t wins = 0, compared = 0;
      for (std::size_t i = 0; i < ls->size(); ++i) {
        const auto& l = (*ls)[i];
        const auto& f = (*fixed)[i];
        if (!l.ok() || !f.ok() || l.records.empty() || f.records.empty()) continue;
        ++compared;
        if (l.records.front().loss.total <= f.records.back().loss.total) ++wins;
      }
      out << layer.label << ": ls-ft@1 <= m-iterft@" << a.iters << " in " << wins << "/"
          << compared << " pairs\n";
    }
  }
}

// --- balance ---------------------------------------------------------------------

struct BalanceArgs {
  std::string alphas = "0.2,1,10,200";
  std::string methods = "ls-ft";
  std::size_t pairs = 20;
  std::uint64_t seed = 0;
  std::size_t channels = 32;
  std::size_t samples = 256;
  std::string content_dist = "unit-gaussian";
  std::string style_dist = "scaled-gaussian:0.5:2";
  std::string out;
};

void run_balance(const BalanceArgs& a, std::ostream& out) {
  std::vector<double> alphas;
  for (const auto& s : split_list(a.alphas)) {
    try {
      std::size_t used = 0;
      alphas.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      fail("usage", "bad alpha value '" + s + "'", 2);
    }
    if (!(alphas.back() >= 0.0)) fail("usage", "alpha values must be non-negative", 2);
  }
  if (alphas.empty()) fail("usage", "--alphas is empty", 2);
  const std::vector<Method> methods = methods_arg(a.methods);
  PairSpec spec;
  try {
    spec = PairSpec{a.channels, a.samples, a.samples, parse_dist(a.content_dist),
                    parse_dist(a.style_dist)};
  } catch (const ShapeError& e) {
    fail("usage", e.what(), 2);
  }
  const std::vector<FeaturePair> pairs = make_pairs(a.seed, a.pairs, spec);

  for (Method m : methods) {
    const MethodOptions opts = default_options(m);
    const std::vector<BalancePoint> points = alpha_sweep(pairs, m, alphas, opts);
    RunManifest manifest;
    manifest.method = std::string(method_name(m));
    manifest.config = config_json(opts);
    manifest.config.erase("alpha");
    manifest.config["alphas"] = alphas;
    manifest.config["pairs"] = a.pairs;
    manifest.config["channels"] = a.channels;
    manifest.config["samples"] = a.samples;
    manifest.seeds = {a.seed};
    manifest.inputs = {"gen:" + dist_name(spec.content_dist), "gen:" + dist_name(spec.style_dist)};

    fs::path path = a.out;
    if (methods.size() > 1) {
      path = path.parent_path() /
             (path.stem().string() + "_" + std::string(method_name(m)) + path.extension().string());
    }
    write_report_csv(balance_report(points, manifest), path);
    out << "wrote " << path.string() << "\n";
    for (const auto& p : points) {
      out << "  " << method_name(m) << " alpha=" << format_number(p.alpha)
          << " content=" << format_number(p.mean_content_loss)
          << " style=" << format_number(p.mean_style_loss) << "\n";
    }
  }
}

// --- bench --------------------------------------------------------------------------

struct BenchArgs {
  std::string shapes = "fhd";
  std::string methods = "ls-ft,m-iterft";
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::string out;
};

void run_bench(const BenchArgs& a, std::ostream& out) {
  if (a.repeats < 3) fail("usage", "--repeats must be at least 3", 2);
  std::vector<TimingShape> shapes;
  try {
    shapes = timing_shapes(a.shapes);
  } catch (const ShapeError& e) {
    fail("usage", e.what(), 2);
  }
  std::vector<std::pair<Method, MethodOptions>> methods;
  nlohmann::json configs = nlohmann::json::object();
  for (Method m : methods_arg(a.methods)) {
    methods.emplace_back(m, default_options(m));
    configs[std::string(method_name(m))] = config_json(methods.back().second);
  }
  const std::vector<TimingRow> rows = timing_bench(shapes, methods, a.repeats, a.seed);

  RunManifest manifest;
  manifest.method = a.methods;
  manifest.config = {{"methods", configs}, {"repeats", a.repeats}, {"warmup", 2},
                     {"shapes_preset", a.shapes}};
  manifest.seeds = {a.seed};
  manifest.inputs = {"gen:unit-gaussian", "gen:scaled-gaussian:0.5:2"};
  write_report_csv(timing_report(rows, manifest), a.out);

  for (const auto& r : rows) {
    out << r.shape << " (" << r.channels << "x" << r.samples << ") " << r.method << ": median "
        << format_number(r.median_seconds) << " s\n";
  }
  for (const auto& shape : shapes) {
    std::optional<double> ls, fixed;
    for (const auto& r : rows) {
      if (r.shape != shape.label) continue;
      if (r.method == "ls-ft") ls = r.median_seconds;
      if (r.method == "m-iterft") fixed = r.median_seconds;
    }
    if (ls && fixed && *ls > 0.0) {
      out << shape.label << ": m-iterft / ls-ft speedup " << format_number(*fixed / *ls) << "x\n";
    }
  }
}

// --- ablate ------------------------------------------------------------------------

struct AblateArgs {
  std::size_t pairs = 20;
  std::uint64_t seed = 0;
  std::size_t channels = 16;
  std::size_t samples = 64;
  std::size_t iters = 15;
  Strength strength;
  std::string content_dist = "scaled-gaussian:1:1";
  std::string style_dist = "scaled-gaussian:-0.5:2";
  std::string out;
};

void run_ablate(const AblateArgs& a, std::ostream& out) {
  a.strength.check();
  PairSpec spec;
  try {
    spec = PairSpec{a.channels, a.samples, a.samples, parse_dist(a.content_dist),
                    parse_dist(a.style_dist)};
  } catch (const ShapeError& e) {
    fail("usage", e.what(), 2);
  }
  const std::vector<FeaturePair> pairs = make_pairs(a.seed, a.pairs, spec);

  struct Variant {
    std::string label;
    Method method;
    bool recenter;
  };
  const std::vector<Variant> variants = {
      {"iterft", Method::IterFT, false},
      {"m-iterft", Method::ModifiedIterFT, true},
      {"m-iterft", Method::ModifiedIterFT, false},
      {"ls-ft", Method::LsFT, true},
      {"ls-ft", Method::LsFT, false},
  };

  CsvReport report;
  report.manifest.kind = "ablation";
  report.manifest.method = "iterft,m-iterft,ls-ft";
  report.manifest.config = {{"pairs", a.pairs},       {"channels", a.channels},
                            {"samples", a.samples},   {"iterations", a.iters},
                            {"strength", a.strength.to_json(Method::LsFT)}};
  report.manifest.seeds = {a.seed};
  report.manifest.inputs = {"gen:" + dist_name(spec.content_dist),
                            "gen:" + dist_name(spec.style_dist)};
  report.header = {"variant",      "recenter",   "iterations",     "mean_final_loss",
                   "content_loss", "style_loss", "max_mean_error", "failures"};

  for (const Variant& v : variants) {
    MethodOptions opts = default_options(v.method);
    opts.config.lambda_mode = a.strength.mode_for(v.method);
    if (v.method != Method::LsFT) opts.config.iterations = a.iters;
    opts.config.recenter_each_step = v.recenter;
    double loss_sum = 0.0, content_sum = 0.0, style_sum = 0.0, mean_err = 0.0;
    std::size_t failures = 0, ok = 0;
    for (const auto& p : pairs) {
      try {
        const TransformResult r = run_method(v.method, p.content, p.style, opts);
        const BalanceLosses l = pair_losses(r.output, p.content, p.style);
        loss_sum += r.trace.final_loss();
        content_sum += l.content;
        style_sum += l.style;
        mean_err = std::max(
            mean_err, (mean_vector(r.output).vec() - mean_vector(p.style).vec()).cwiseAbs().maxCoeff());
        ++ok;
      } catch (const NumericalError&) {
        ++failures;
      }
    }
    const double denom = ok > 0 ? static_cast<double>(ok) : 1.0;
    report.rows.push_back({v.label, v.recenter ? "on" : "off",
                           std::to_string(opts.config.iterations), format_number(loss_sum / denom),
                           format_number(content_sum / denom), format_number(style_sum / denom),
                           format_number(mean_err), std::to_string(failures)});
    out << v.label << " (recenter " << (v.recenter ? "on" : "off") << "): final loss "
        << format_number(loss_sum / denom) << ", max |mean(out) - mean(style)| "
        << format_number(mean_err) << ", failures " << failures << "\n";
  }
  write_report_csv(report, a.out);
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Line-search feature transformation toolkit"};
  app.name("lsft");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic FTZ feature file");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--channels", gen.channels)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--samples", gen.samples)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--dist", gen.dist, "unit-gaussian | scaled-gaussian:MEAN:SIGMA | low-rank:R");
  gen_cmd->add_option("--dtype", gen.dtype, "f32 | f64");
  gen_cmd->add_option("--out", gen.out)->required();

  TransformArgs tr;
  auto* tr_cmd = app.add_subcommand("transform", "transform a content feature toward a style");
  tr_cmd->add_option("--method", tr.method)->required();
  tr_cmd->add_option("--content", tr.content)->required();
  tr_cmd->add_option("--style", tr.style)->required();
  tr.strength.add_to(*tr_cmd);
  tr_cmd->add_option("--eta", tr.eta, "fixed learning rate (iterft, m-iterft)");
  tr_cmd->add_option("--iters", tr.iters);
  tr_cmd->add_option("--beta", tr.beta, "interp weight in [0, 1]");
  tr_cmd->add_flag("--no-recenter", tr.no_recenter);
  tr_cmd->add_option("--dtype", tr.dtype, "output precision (default: the content file's)");
  tr_cmd->add_option("--out", tr.out)->required();
  tr_cmd->add_option("--trace", tr.trace, "per-iteration loss CSV");

  ConvergeArgs cv;
  auto* cv_cmd = app.add_subcommand("converge", "loss-per-iteration curves over seeded pairs");
  cv_cmd->add_option("--pairs", cv.pairs);
  cv_cmd->add_option("--seed", cv.seed);
  cv_cmd->add_option("--layers", cv.layers, "fig4 | vgg | tiny");
  cv_cmd->add_option("--methods", cv.methods);
  cv_cmd->add_option("--iters", cv.iters);
  cv.strength.add_to(*cv_cmd);
  cv_cmd->add_option("--content-dist", cv.content_dist);
  cv_cmd->add_option("--style-dist", cv.style_dist);
  cv_cmd->add_option("--out", cv.out, "output directory")->required();

  BalanceArgs bl;
  auto* bl_cmd = app.add_subcommand("balance", "content/style losses across alpha values");
  bl_cmd->add_option("--alphas", bl.alphas);
  bl_cmd->add_option("--methods", bl.methods);
  bl_cmd->add_option("--pairs", bl.pairs)->check(CLI::PositiveNumber);
  bl_cmd->add_option("--seed", bl.seed);
  bl_cmd->add_option("--channels", bl.channels)->check(CLI::PositiveNumber);
  bl_cmd->add_option("--samples", bl.samples)->check(CLI::PositiveNumber);
  bl_cmd->add_option("--content-dist", bl.content_dist);
  bl_cmd->add_option("--style-dist", bl.style_dist);
  bl_cmd->add_option("--out", bl.out)->required();

  BenchArgs bn;
  auto* bn_cmd = app.add_subcommand("bench", "median wall time per method and shape");
  bn_cmd->add_option("--shapes", bn.shapes, "hd | fhd | qhd | uhd | all | tiny");
  bn_cmd->add_option("--methods", bn.methods);
  bn_cmd->add_option("--repeats", bn.repeats);
  bn_cmd->add_option("--seed", bn.seed);
  bn_cmd->add_option("--out", bn.out)->required();

  AblateArgs ab;
  auto* ab_cmd = app.add_subcommand("ablate", "iterft vs m-iterft vs ls-ft, re-centering on/off");
  ab_cmd->add_option("--pairs", ab.pairs)->check(CLI::PositiveNumber);
  ab_cmd->add_option("--seed", ab.seed);
  ab_cmd->add_option("--channels", ab.channels)->check(CLI::PositiveNumber);
  ab_cmd->add_option("--samples", ab.samples)->check(CLI::PositiveNumber);
  ab_cmd->add_option("--iters", ab.iters);
  ab.strength.add_to(*ab_cmd);
  ab_cmd->add_option("--content-dist", ab.content_dist);
  ab_cmd->add_option("--style-dist", ab.style_dist);
  ab_cmd->add_option("--out", ab.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_cmd) run_gen(gen, out);
    else if (*tr_cmd) run_transform(tr, out);
    else if (*cv_cmd) run_converge(cv, out);
    else if (*bl_cmd) run_balance(bl, out);
    else if (*bn_cmd) run_bench(bn, out);
    else if (*ab_cmd) run_ablate(ab, out);
    return 0;
  } catch (const CliError& e) {
    err << "error: " << e.code << ": " << e.message << "\n";
    return e.exit_code;
  } catch (const FtzError& e) {
    err << "error: format: " << e.what() << "\n";
  } catch (const NumericalError& e) {
    err << "error: numerical: " << e.what() << "\n";
  } catch (const ShapeError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: io: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace lsft
