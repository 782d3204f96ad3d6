#include <doctest.h>

#include <cmath>
#include <string>

#include "lsft/harness.hpp"
#include "lsft/linesearch.hpp"
#include "lsft/random.hpp"
#include "oracles.hpp"

using namespace lsft;

namespace {

FeatureMatrix fm(const RowMatrix& m) { return FeatureMatrix(m); }

ConvergenceTrace trace_of(std::initializer_list<double> losses) {
  ConvergenceTrace t;
  for (double l : losses) t.records.push_back({LossBreakdown{l, l, 0.0, 0.0}, std::nullopt, {}});
  return t;
}

PairSpec small_spec() {
  PairSpec spec;
  spec.channels = 6;
  spec.content_samples = 40;
  spec.style_samples = 48;
  return spec;
}

}  // namespace

TEST_SUITE("counter generator") {
  TEST_CASE("mixing function matches the published SplitMix64 output") {
    // First SplitMix64 output for state 0 is mix64(0 + golden gamma).
    CHECK(mix64(0x9E3779B97F4A7C15ULL) == 0xE220A8397B1DCDAFULL);
    CHECK(mix64(0) == 0);
  }

  TEST_CASE("draws are pure functions of seed and index") {
    const CounterRng a(42), b(42), c(43);
    for (std::uint64_t i = 0; i < 100; ++i) {
      CHECK(a.bits(i) == b.bits(i));
      CHECK(a.normal(i) == b.normal(i));
      const double u = a.uniform(i);
      CHECK(u > 0.0);
      CHECK(u < 1.0);
    }
    int same = 0;
    for (std::uint64_t i = 0; i < 100; ++i) same += a.bits(i) == c.bits(i);
    CHECK(same == 0);
  }

  TEST_CASE("normal pairs follow Box-Muller") {
    const CounterRng rng(5);
    for (std::uint64_t m = 0; m < 20; ++m) {
      const double r = std::sqrt(-2.0 * std::log(rng.uniform(2 * m)));
      const double theta = 2.0 * 3.14159265358979323846 * rng.uniform(2 * m + 1);
      CHECK(rng.normal(2 * m) == doctest::Approx(r * std::cos(theta)).epsilon(1e-15));
      CHECK(rng.normal(2 * m + 1) == doctest::Approx(r * std::sin(theta)).epsilon(1e-15));
    }
  }

  TEST_CASE("derived seeds differ per stream") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(1, 7) == derive_seed(1, 7));
  }
}

TEST_SUITE("gen_features") {
  TEST_CASE("deterministic") {
    const FeatureMatrix a = gen_features(9, 5, 33, UnitGaussian{});
    const FeatureMatrix b = gen_features(9, 5, 33, UnitGaussian{});
    CHECK(a.mat() == b.mat());
    CHECK(a.mat() != gen_features(10, 5, 33, UnitGaussian{}).mat());
    CHECK(gen_features(3, 4, 20, LowRank{2}).mat() == gen_features(3, 4, 20, LowRank{2}).mat());
  }

  TEST_CASE("entries follow the documented stream") {
    const CounterRng rng(21);
    const FeatureMatrix f = gen_features(21, 3, 7, ScaledGaussian{1.5, 0.25});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 7; ++j) CHECK(f(i, j) == 1.5 + 0.25 * rng.normal(i * 7 + j));
  }

  TEST_CASE("low rank one has one nonzero eigenvalue") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const FeatureMatrix f = gen_features(seed, 6, 50, LowRank{1});
      Eigen::SelfAdjointEigenSolver<Matrix> es(gram(f, 50).mat());
      const Vector ev = es.eigenvalues();
      CHECK(ev(4) <= 1e-9 * ev(5));
    }
  }

  TEST_CASE("unit gaussian channel means stay within four standard errors") {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const FeatureMatrix f = gen_features(seed, 8, 4096, UnitGaussian{});
      const auto means = oracle::row_means(f.mat());
      bool all = true;
      for (long double m : means) all = all && std::abs(static_cast<double>(m)) <= 4.0 / 64.0;
      ok += all;
    }
    CHECK(ok >= 99);
  }

  TEST_CASE("invalid shapes are rejected") {
    CHECK_THROWS_AS(gen_features(0, 0, 5, UnitGaussian{}), ShapeError);
    CHECK_THROWS_AS(gen_features(0, 3, 0, UnitGaussian{}), ShapeError);
    CHECK_THROWS_AS(gen_features(0, 3, 5, LowRank{4}), ShapeError);
    CHECK_THROWS_AS(gen_features(0, 3, 5, LowRank{0}), ShapeError);
    CHECK_THROWS_AS(gen_features(0, 3, 5, ScaledGaussian{0.0, -1.0}), ShapeError);
  }

  TEST_CASE("distribution names round trip") {
    for (const char* text : {"unit-gaussian", "scaled-gaussian:0.5:2", "low-rank:3"}) {
      CHECK(dist_name(parse_dist(text)) == text);
    }
    CHECK_THROWS_AS(parse_dist("cauchy"), ShapeError);
    CHECK_THROWS_AS(parse_dist("scaled-gaussian:1"), ShapeError);
    CHECK_THROWS_AS(parse_dist("low-rank:x"), ShapeError);
  }
}

TEST_SUITE("pairs and methods") {
  TEST_CASE("pairs are independent of batch size") {
    const auto batch = make_pairs(17, 5, small_spec());
    for (std::size_t k = 0; k < 5; ++k) {
      const FeaturePair p = make_pair(17, k, small_spec());
      CHECK(p.content.mat() == batch[k].content.mat());
      CHECK(p.style.mat() == batch[k].style.mat());
      CHECK(p.seed == batch[k].seed);
    }
    CHECK(batch[0].content.mat() != batch[1].content.mat());
    CHECK(batch[0].style.samples() == 48);
  }

  TEST_CASE("method names round trip") {
    for (const char* name :
         {"adain", "adain-ablated", "zca", "zca-gram", "interp", "iterft", "m-iterft", "ls-ft"}) {
      CHECK(method_name(parse_method(name)) == name);
    }
    CHECK_THROWS_AS(parse_method("ost"), ShapeError);
    CHECK(is_iterative(Method::LsFT));
    CHECK_FALSE(is_iterative(Method::Zca));
  }

  TEST_CASE("interp blends zca with the content") {
    const FeaturePair p = make_pair(1, 0, small_spec());
    MethodOptions opts = default_options(Method::Interp);
    opts.beta = 0.25;
    const RowMatrix got = run_method(Method::Interp, p.content, p.style, opts).output.mat();
    const RowMatrix want = 0.25 * zca(p.content, p.style).mat() + 0.75 * p.content.mat();
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("alpha presets") {
    CHECK(alpha_preset("wct2", Method::LsFT) == 10.0);
    CHECK(alpha_preset("wct2", Method::ModifiedIterFT) == 50.0);
    CHECK(alpha_preset("photowct", Method::LsFT) == 0.2);
    CHECK(alpha_preset("photowct", Method::ModifiedIterFT) == 0.5);
    CHECK(alpha_preset("photowct2", Method::LsFT) == 1.0);
    CHECK(alpha_preset("photowct2", Method::ModifiedIterFT) == 2.0);
    CHECK(alpha_preset("pca-d", Method::LsFT) == 200.0);
    CHECK(alpha_preset("pca-d", Method::ModifiedIterFT) == 200.0);
    CHECK_THROWS_AS(alpha_preset("mast", Method::LsFT), ShapeError);
  }
}

TEST_SUITE("convergence experiments") {
  TEST_CASE("every trace has the requested length") {
    const auto pairs = make_pairs(3, 6, small_spec());
    for (Method m : {Method::ModifiedIterFT, Method::LsFT, Method::IterFT}) {
      const auto traces = convergence_experiment(pairs, m, default_options(m), 15);
      REQUIRE(traces.size() == 6);
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(traces[i].ok());
        CHECK(traces[i].records.size() == 15);
        CHECK(traces[i].seed == pairs[i].seed);
      }
    }
  }

  TEST_CASE("a content-equals-style pair gives a flat zero trace") {
    const FeaturePair p = make_pair(3, 0, small_spec());
    const auto traces = convergence_experiment({{p.content, p.content, 0}}, Method::ModifiedIterFT,
                                               default_options(Method::ModifiedIterFT), 15);
    REQUIRE(traces[0].records.size() == 15);
    for (const auto& r : traces[0].records) CHECK(r.loss.total == 0.0);
  }

  TEST_CASE("batched traces equal single invocations") {
    const auto pairs = make_pairs(8, 10, small_spec());
    for (Method m : {Method::ModifiedIterFT, Method::LsFT}) {
      const auto traces = convergence_experiment(pairs, m, default_options(m), 4);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        MethodOptions opts = default_options(m);
        opts.config.iterations = 4;
        opts.config.early_stop = false;
        const TransformResult r = run_method(m, pairs[i].content, pairs[i].style, opts);
        REQUIRE(r.trace.records.size() == traces[i].records.size());
        for (std::size_t k = 0; k < r.trace.records.size(); ++k) {
          CHECK(r.trace.records[k].loss.total == traces[i].records[k].loss.total);
          CHECK(r.trace.records[k].eta == traces[i].records[k].eta);
        }
      }
    }
  }

  TEST_CASE("failures are recorded per pair") {
    PairSpec spec = small_spec();
    spec.content_dist = ScaledGaussian{0.0, 10.0};
    spec.style_dist = ScaledGaussian{0.0, 0.1};
    const auto pairs = make_pairs(1, 3, spec);
    MethodOptions opts = default_options(Method::IterFT, 1000.0);
    opts.config.eta_mode = FixedEta{1.0};
    const auto traces = convergence_experiment(pairs, Method::IterFT, opts, 200);
    REQUIRE(traces.size() == 3);
    for (const auto& t : traces) {
      CHECK_FALSE(t.ok());
      CHECK(t.error->find("iteration") != std::string::npos);
    }
    CHECK_THROWS_AS(convergence_experiment({}, Method::LsFT, default_options(Method::LsFT), 1),
                    ShapeError);
    CHECK_THROWS_AS(convergence_experiment(pairs, Method::Zca, default_options(Method::Zca), 1),
                    ShapeError);
  }
}

TEST_SUITE("aggregation") {
  TEST_CASE("single trace") {
    const AggregateCurve c = aggregate_traces({trace_of({5.0, 4.0, 3.5})});
    CHECK(c.mean == std::vector<double>{5.0, 4.0, 3.5});
    CHECK(c.std_dev == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(c.trials == 1);
  }

  TEST_CASE("two constant traces") {
    const AggregateCurve c = aggregate_traces({trace_of({1.0}), trace_of({3.0})});
    CHECK(c.mean[0] == 2.0);
    CHECK(c.std_dev[0] == 1.0);
  }

  TEST_CASE("matches a streaming computation") {
    const auto pairs = make_pairs(4, 100, PairSpec{4, 16, 16, UnitGaussian{}, ScaledGaussian{0.5, 2.0}});
    const auto traces =
        convergence_experiment(pairs, Method::ModifiedIterFT, default_options(Method::ModifiedIterFT), 15);
    const AggregateCurve c = aggregate_traces(traces);
    for (std::size_t k = 0; k < 15; ++k) {
      // Welford's update, in long double.
      long double mean = 0.0L, m2 = 0.0L;
      std::size_t n = 0;
      for (const auto& t : traces) {
        ++n;
        const long double x = t.records[k].loss.total;
        const long double delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
      }
      const double sd = static_cast<double>(std::sqrt(m2 / n));
      CHECK(std::abs(c.mean[k] - static_cast<double>(mean)) <= 1e-10 * std::abs(c.mean[k]));
      CHECK(std::abs(c.std_dev[k] - sd) <= 1e-10 * std::abs(c.mean[k]));
      CHECK(c.std_dev[k] >= 0.0);
    }
  }

  TEST_CASE("bad input") {
    CHECK_THROWS_AS(aggregate_traces({}), ShapeError);
    CHECK_THROWS_AS(aggregate_traces({trace_of({1.0}), trace_of({1.0, 2.0})}), ShapeError);
  }
}

TEST_SUITE("balance metrics") {
  TEST_CASE("identical features give zero losses") {
    std::vector<FeatureMatrix> layers;
    for (std::size_t c : {8, 6, 4, 2}) layers.push_back(gen_features(c, c, 20, UnitGaussian{}));
    const BalanceLosses l = content_style_losses(layers, layers, layers);
    CHECK(l.content == 0.0);
    CHECK(l.style == 0.0);
  }

  TEST_CASE("matches a naive oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::vector<FeatureMatrix> sty, c, s;
      for (long ch : {6, 5, 4, 3}) {
        sty.push_back(fm(oracle::random_matrix(seed * 10 + ch, ch, 18, 0.5)));
        c.push_back(fm(oracle::random_matrix(seed * 10 + ch + 100, ch, 18, -0.5)));
        s.push_back(fm(oracle::random_matrix(seed * 10 + ch + 200, ch, 25, 0.0, 2.0)));
      }
      const BalanceLosses got = content_style_losses(sty, c, s);
      const oracle::Mat sty0 = oracle::centered(sty[0].mat());
      const long double content = oracle::loss(sty0, oracle::centered(c[0].mat()), sty0, 0.0);
      long double style = 0.0L;
      for (std::size_t level = 0; level < 4; ++level) {
        const oracle::Mat a = oracle::centered(sty[level].mat());
        style += oracle::loss(a, a, oracle::centered(s[level].mat()), 1.0);
      }
      CHECK(std::abs(got.content - static_cast<double>(content)) <= 1e-10 * got.content);
      CHECK(std::abs(got.style - static_cast<double>(style)) <= 1e-10 * got.style);
    }
  }

  TEST_CASE("missing layers are rejected") {
    std::vector<FeatureMatrix> three(3, FeatureMatrix::zeros(2, 2));
    CHECK_THROWS_AS(content_style_losses(three, three, three), ShapeError);
  }

  TEST_CASE("alpha zero keeps line search on the content") {
    const auto pairs = make_pairs(2, 5, small_spec());
    const auto points = alpha_sweep(pairs, Method::LsFT, {0.0, 1.0}, default_options(Method::LsFT));
    REQUIRE(points.size() == 2);
    CHECK(points[0].mean_content_loss <= 1e-20);
    CHECK(points[1].mean_content_loss > 0.0);
    CHECK(points[1].mean_style_loss < points[0].mean_style_loss);
    CHECK_THROWS_AS(alpha_sweep(pairs, Method::LsFT, {}), ShapeError);
  }
}

TEST_SUITE("layer schedules") {
  TEST_CASE("presets") {
    const LayerSchedule vgg = LayerSchedule::preset("vgg", 1);
    REQUIRE(vgg.layers.size() == 4);
    CHECK(vgg.layers[0].label == "relu4_1");
    CHECK(vgg.layers[0].channels == 512);
    CHECK(vgg.layers[3].channels == 64);
    CHECK(vgg.layers[3].content_samples == 64 * 64);
    CHECK(vgg.layers[0].content_samples == 8 * 8);
    const LayerSchedule fig4 = LayerSchedule::preset("fig4", 1);
    for (const auto& l : fig4.layers) CHECK(l.content_samples == 4 * l.channels);
    CHECK_THROWS_AS(LayerSchedule::preset("resnet", 1), ShapeError);
  }

  TEST_CASE("one layer equals a direct call") {
    LayerSchedule s;
    s.layers.push_back({"only", 5, 30, 40, SeedSource{12}});
    const ScheduleRun run = layer_schedule_run(s, Method::LsFT, default_options(Method::LsFT));
    REQUIRE(run.layers.size() == 1);
    CHECK_FALSE(run.losses.has_value());
    const FeatureMatrix c = gen_features(derive_seed(12, 0), 5, 30, UnitGaussian{});
    const FeatureMatrix st = gen_features(derive_seed(12, 1), 5, 40, ScaledGaussian{0.5, 2.0});
    const TransformResult direct = ls_ft(c, st, TransformConfig::line_search());
    CHECK(run.layers[0].output.mat() == direct.output.mat());
    CHECK(run.layers[0].trace.layer == "only");
  }

  TEST_CASE("four layers produce balance losses") {
    LayerSchedule s = LayerSchedule::preset("tiny", 5);
    const ScheduleRun run = layer_schedule_run(s, Method::LsFT, default_options(Method::LsFT));
    REQUIRE(run.losses.has_value());
    CHECK(run.losses->content > 0.0);
  }

  TEST_CASE("layer failures carry the label") {
    LayerSchedule s;
    s.layers.push_back({"relu9_9", 2, 4, 4, FileSource{"/nonexistent/c.ftz", "/nonexistent/s.ftz"}});
    try {
      layer_schedule_run(s, Method::LsFT, default_options(Method::LsFT));
      FAIL("expected an error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("relu9_9") != std::string::npos);
    }
    CHECK_THROWS_AS(layer_schedule_run(LayerSchedule{}, Method::LsFT, default_options(Method::LsFT)),
                    ShapeError);
  }
}

TEST_SUITE("timing and step sizes") {
  TEST_CASE("one row per shape and method") {
    std::vector<std::pair<Method, MethodOptions>> methods{
        {Method::LsFT, default_options(Method::LsFT)},
        {Method::ModifiedIterFT, default_options(Method::ModifiedIterFT)}};
    const auto rows = timing_bench(timing_shapes("tiny"), methods, 3, 0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == "ls-ft");
    CHECK(rows[1].method == "m-iterft");
    for (const auto& r : rows) {
      CHECK(r.median_seconds > 0.0);
      CHECK(r.repeats == 3);
      CHECK(r.shape == "tiny");
    }
    CHECK_THROWS_AS(timing_bench(timing_shapes("tiny"), methods, 2, 0), ShapeError);
  }

  TEST_CASE("shape presets") {
    CHECK(timing_shapes("fhd")[0].samples == 129600);
    CHECK(timing_shapes("fhd")[0].channels == 64);
    CHECK(timing_shapes("all").size() == 4);
    CHECK_THROWS_AS(timing_shapes("8k"), ShapeError);
  }

  TEST_CASE("histogram of a single step") {
    ConvergenceTrace t;
    t.records.push_back({LossBreakdown{}, 0.5, {}});
    const Histogram h = eta_histogram({t});
    REQUIRE(h.counts.size() == 40);
    REQUIRE(h.edges.size() == 41);
    CHECK(h.edges.back() == 0.5);
    int nonzero = 0;
    for (auto c : h.counts) nonzero += c > 0;
    CHECK(nonzero == 1);
  }

  TEST_CASE("histogram counts every step") {
    PairSpec spec = small_spec();
    const auto traces = convergence_experiment(make_pairs(6, 100, spec), Method::LsFT,
                                               default_options(Method::LsFT), 3);
    std::size_t etas = 0;
    for (const auto& t : traces)
      for (const auto& r : t.records) {
        if (!r.eta) continue;
        ++etas;
        CHECK(*r.eta > 0.0);
      }
    const Histogram h = eta_histogram(traces);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == etas);
    CHECK_THROWS_AS(eta_histogram({trace_of({1.0})}), ShapeError);
  }

  TEST_CASE("worker count is positive") { CHECK(worker_count() >= 1); }
}
