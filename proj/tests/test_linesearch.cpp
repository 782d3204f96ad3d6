#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lsft/linesearch.hpp"
#include "oracles.hpp"

using namespace lsft;

namespace {

FeatureMatrix fm(const RowMatrix& m) { return FeatureMatrix(m); }

struct Instance {
  RowMatrix ft, fc, fs, d;
  Matrix s;
  double lambda;
};

// A centered problem at a perturbed iterate, with the library's gradient.
Instance make_instance(std::uint64_t seed, long c, long n, double lambda) {
  Instance in;
  in.fc = oracle::centered(oracle::random_matrix(seed, c, n));
  in.fs = oracle::centered(oracle::random_matrix(seed + 1, c, n + 3, 0.0, 1.8));
  in.ft = oracle::centered(in.fc + 0.3 * oracle::random_matrix(seed + 2, c, n));
  in.lambda = lambda;
  const GradientBundle g = gradient(fm(in.ft), fm(in.fc), fm(in.fs), lambda);
  in.d = g.d;
  in.s = g.s.mat();
  return in;
}

long double phi_oracle(const Instance& in, double eta) {
  return oracle::loss(in.ft - eta * in.d, in.fc, in.fs, in.lambda);
}

}  // namespace

TEST_SUITE("cubic coefficients") {
  TEST_CASE("lambda zero reduces to a linear equation with root one half") {
    const Instance in = make_instance(1, 3, 8, 0.0);
    const CubicCoefficients k = cubic_coefficients(in.d, in.ft, in.s, 0.0, 8);
    CHECK(k.a == 0.0);
    CHECK(k.b == 0.0);
    CHECK(k.c == k.tr_D2);
    CHECK(k.d == -0.5 * k.tr_D2);
    const auto roots = solve_cubic(k);
    REQUIRE(roots.size() == 1);
    CHECK(roots[0] == 0.5);
  }

  TEST_CASE("zero gradient gives zero coefficients") {
    const Instance in = make_instance(2, 3, 8, 1.0);
    const CubicCoefficients k = cubic_coefficients(RowMatrix::Zero(3, 8), in.ft, in.s, 1.0, 8);
    CHECK(k.a == 0.0);
    CHECK(k.b == 0.0);
    CHECK(k.c == 0.0);
    CHECK(k.d == 0.0);
    CHECK_THROWS_AS(solve_cubic(k), NumericalError);
  }

  TEST_CASE("signs of the outer coefficients") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Instance in = make_instance(seed, 4, 12, 0.7);
      const CubicCoefficients k = cubic_coefficients(in.d, in.ft, in.s, in.lambda, 12);
      CHECK(k.a > 0.0);
      CHECK(k.d < 0.0);
      CHECK(k.d == -0.5 * k.tr_D2);
    }
  }

  TEST_CASE("cached traces match explicit products") {
    const Instance in = make_instance(3, 4, 10, 1.0);
    const CubicCoefficients k = cubic_coefficients(in.d, in.ft, in.s, 1.0, 10);
    const Matrix d2 = in.d * in.d.transpose();
    const Matrix df = in.d * in.ft.transpose();
    CHECK(k.tr_D2 == doctest::Approx(d2.trace()).epsilon(1e-12));
    CHECK(k.tr_D2D2 == doctest::Approx((d2 * d2).trace()).epsilon(1e-12));
    CHECK(k.tr_DF_D2 == doctest::Approx((df * d2).trace()).epsilon(1e-12));
    CHECK(k.tr_D2S == doctest::Approx((d2 * in.s).trace()).epsilon(1e-12));
    CHECK(k.tr_DFDF == doctest::Approx((df * df).trace()).epsilon(1e-12));
    CHECK(k.tr_DFDFt == doctest::Approx((df * df.transpose()).trace()).epsilon(1e-12));
  }

  TEST_CASE("the cubic is half the derivative of phi") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Instance in = make_instance(seed, 3, 8, 1.0);
      const CubicCoefficients k = cubic_coefficients(in.d, in.ft, in.s, 1.0, 8);
      for (double eta : {0.05, 0.2, 0.5}) {
        const double fd =
            oracle::fd_derivative([&](double e) { return phi_oracle(in, e); }, eta, 1e-5);
        const double analytic = 2.0 * ((k.a * eta + k.b) * eta + k.c) * eta + 2.0 * k.d;
        CHECK(std::abs(analytic - fd) <= 1e-5 * std::abs(fd) + 1e-9);
      }
    }
  }

  TEST_CASE("describe lists the coefficients") {
    CubicCoefficients k;
    k.a = 1.5;
    const std::string s = k.describe();
    CHECK(s.find("a=1.5") != std::string::npos);
    CHECK(s.find("tr[D2D2]=") != std::string::npos);
  }
}

TEST_SUITE("phi") {
  TEST_CASE("at zero it is the current loss") {
    const Instance in = make_instance(4, 3, 9, 1.3);
    const double p = phi(0.0, fm(in.ft), fm(in.fc), fm(in.fs), in.d, in.lambda);
    CHECK(p == total_loss(fm(in.ft), fm(in.fc), fm(in.fs), in.lambda).total);
  }

  TEST_CASE("lambda zero step of one half lands on the content") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Instance in = make_instance(seed, 4, 16, 0.0);
      const double p = phi(0.5, fm(in.ft), fm(in.fc), fm(in.fs), in.d, 0.0);
      // ft − ½·2(ft − fc) rounds back to fc up to one rounding per entry.
      const double eps = std::numeric_limits<double>::epsilon();
      CHECK(p <= in.fc.size() * std::pow(eps * in.fc.cwiseAbs().maxCoeff(), 2));
    }
  }

  TEST_CASE("matches the quartic built from the cubic coefficients") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Instance in = make_instance(seed, 4, 12, 0.9);
      const LineModel model(in.d, in.ft, in.fc, in.s, in.lambda, 12);
      const CubicCoefficients& k = model.coefficients();
      const double phi0 = static_cast<double>(phi_oracle(in, 0.0));
      for (double eta = 0.0; eta <= 1.0; eta += 0.05) {
        const double quartic = phi0 + k.a * std::pow(eta, 4) / 2.0 + 2.0 * k.b * std::pow(eta, 3) / 3.0 +
                               k.c * eta * eta + 2.0 * k.d * eta;
        const double direct = phi(eta, fm(in.ft), fm(in.fc), fm(in.fs), in.d, in.lambda);
        CHECK(std::abs(quartic - direct) <= 1e-9 * std::abs(direct));
        CHECK(std::abs(model.phi(eta) - direct) <= 1e-9 * std::abs(direct));
        CHECK(std::abs(direct - static_cast<double>(phi_oracle(in, eta))) <= 1e-10 * std::abs(direct));
      }
    }
  }
}

TEST_SUITE("solve_cubic") {
  TEST_CASE("linear") {
    const auto r = solve_cubic(0, 0, 1, -0.5);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == 0.5);
  }

  TEST_CASE("factored cubic") {
    const auto r = solve_cubic(1, -6, 11, -6);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r[2] == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("quadratic fallback") {
    const auto r = solve_cubic(0, 1, -3, 2);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(2.0));
    CHECK(solve_cubic(0, 1, 0, 1).empty());
    // A leading coefficient far below the others is treated as zero.
    const auto tiny = solve_cubic(1e-20, 1, -3, 2);
    REQUIRE(tiny.size() == 2);
    CHECK(tiny[1] == doctest::Approx(2.0));
  }

  TEST_CASE("repeated roots collapse") {
    const auto triple = solve_cubic(1, -3, 3, -1);
    REQUIRE(triple.size() == 1);
    CHECK(triple[0] == doctest::Approx(1.0).epsilon(1e-9));
    const auto dbl = solve_cubic(1, -4, 5, -2);  // (x − 1)²(x − 2)
    REQUIRE(dbl.size() == 2);
    CHECK(dbl[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(dbl[1] == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("one real root via Cardano") {
    const auto r = solve_cubic(1, 0, 1, -2);  // (x − 1)(x² + x + 2)
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-14));
    const auto neg = solve_cubic(2, 0, 0, 16);
    REQUIRE(neg.size() == 1);
    CHECK(neg[0] == doctest::Approx(-2.0).epsilon(1e-14));
  }

  TEST_CASE("all zero is a degenerate gradient") {
    try {
      solve_cubic(0, 0, 0, 0);
      FAIL("expected an error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("degenerate gradient") != std::string::npos);
    }
  }

  TEST_CASE("line-search coefficients agree with bisection") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const Instance in = make_instance(seed, 3, 8, 0.5 + 0.1 * static_cast<double>(seed));
      CubicCoefficients k = cubic_coefficients(in.d, in.ft, in.s, in.lambda, 8);
      const double scale = std::max({std::abs(k.a), std::abs(k.b), std::abs(k.c), std::abs(k.d)});
      const auto got = solve_cubic(k);
      const auto want = oracle::bisection_roots(k.a / scale, k.b / scale, k.c / scale, k.d / scale,
                                                -10.0, 10.0);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-9);
    }
  }

  TEST_CASE("random cubics with three real roots") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int t = 0; t < 200; ++t) {
      double r1 = u(gen), r2 = u(gen), r3 = u(gen);
      if (std::min({std::abs(r1 - r2), std::abs(r2 - r3), std::abs(r1 - r3)}) < 1e-3) continue;
      const double lead = 0.5 + std::abs(u(gen));
      const double b = -lead * (r1 + r2 + r3);
      const double c = lead * (r1 * r2 + r2 * r3 + r1 * r3);
      const double d = -lead * r1 * r2 * r3;
      const auto got = solve_cubic(lead, b, c, d);
      REQUIRE(got.size() == 3);
      std::vector<double> want{r1, r2, r3};
      std::sort(want.begin(), want.end());
      for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-8));
      const double m = std::max({lead, std::abs(b), std::abs(c), std::abs(d)});
      for (double r : got) {
        const double res = std::abs(static_cast<double>(oracle::cubic(lead, b, c, d, r)));
        CHECK(res <= 1e-9 * m * (1.0 + std::pow(std::abs(r), 3)));
      }
    }
  }
}

TEST_SUITE("select_step") {
  TEST_CASE("single positive root") {
    const StepResult s = select_step({-2.0, 0.4}, [](double e) { return (e - 0.4) * (e - 0.4); });
    CHECK(s.eta == 0.4);
    CHECK(s.phi_before == doctest::Approx(0.16));
    CHECK(s.phi_after == 0.0);
    CHECK(s.positive_roots_considered == std::vector<double>{0.4});
    CHECK(s.real_roots.size() == 2);
  }

  TEST_CASE("lowest phi wins") {
    const auto quad = [](double e) { return e < 0.5 ? 1.0 - e : 2.0; };
    const StepResult s = select_step({-1.0, 0.3, 0.7}, quad);
    CHECK(s.eta == 0.3);
    const StepResult t = select_step({0.3, 0.7}, [](double e) { return -e; });
    CHECK(t.eta == 0.7);
  }

  TEST_CASE("no positive root is a numerical fault") {
    CHECK_THROWS_AS(select_step({-1.0, 0.0}, [](double e) { return e; }), NumericalError);
    CHECK_THROWS_AS(select_step({}, [](double e) { return e; }), NumericalError);
  }

  TEST_CASE("three positive roots agree with a grid search") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> r{u(gen), u(gen), u(gen)};
      std::sort(r.begin(), r.end());
      if (r[1] - r[0] < 0.05 || r[2] - r[1] < 0.05) continue;
      // φ′ = 2(η − r₀)(η − r₁)(η − r₂), integrated with φ(0) = 1.
      const double a = 1.0, b = -(r[0] + r[1] + r[2]);
      const double c = r[0] * r[1] + r[1] * r[2] + r[0] * r[2], d = -r[0] * r[1] * r[2];
      const auto quartic = [&](double e) {
        return 1.0 + a * std::pow(e, 4) / 2.0 + 2.0 * b * std::pow(e, 3) / 3.0 + c * e * e + 2.0 * d * e;
      };
      const StepResult s = select_step(solve_cubic(a, b, c, d), quartic);
      CHECK(s.positive_roots_considered.size() == 3);
      const oracle::GridMin g =
          oracle::grid_argmin([&](double e) { return quartic(e); }, 1e-4, 1.5 * r[2], 1e-4);
      CHECK(std::abs(s.eta - g.x) <= 2e-3);
      CHECK(std::abs(s.phi_after - static_cast<double>(g.value)) <=
            1e-6 * std::abs(static_cast<double>(g.value)));
    }
  }
}

TEST_SUITE("ls_ft") {
  TEST_CASE("content equal to style is returned unchanged") {
    const RowMatrix f = oracle::random_matrix(1, 4, 30, 1.0, 2.0);
    const TransformResult r = ls_ft(fm(f), fm(f), TransformConfig::line_search());
    CHECK((r.output.mat() - f).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(r.trace.records.empty());
  }

  TEST_CASE("lambda zero steps exactly one half onto the content") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const RowMatrix fc = oracle::random_matrix(seed, 4, 25, 1.0);
      const RowMatrix fs = oracle::random_matrix(seed + 9, 4, 30, -2.0);
      TransformConfig cfg = TransformConfig::line_search();
      cfg.lambda_mode = ExplicitLambda{0.0};
      cfg.perturbation = Perturbation{seed, 0.5};
      const LineSearchRun run = ls_ft_detailed(fm(fc), fm(fs), cfg);
      REQUIRE(run.steps.size() == 1);
      CHECK(run.steps[0].eta == 0.5);
      const Centralized cc = centralize(fm(fc));
      const RowMatrix want = decentralize(cc.matrix, mean_vector(fm(fs))).mat();
      CHECK((run.result.output.mat() - want).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + want.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("each step strictly decreases the loss") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const RowMatrix fc = oracle::random_matrix(seed, 6, 40);
      const RowMatrix fs = oracle::random_matrix(seed + 3, 6, 50, 0.5, 2.0);
      TransformConfig cfg = TransformConfig::line_search();
      cfg.iterations = 8;
      const LineSearchRun run = ls_ft_detailed(fm(fc), fm(fs), cfg);
      double prev = run.result.trace.initial.total;
      for (std::size_t k = 0; k < run.result.trace.records.size(); ++k) {
        const auto& rec = run.result.trace.records[k];
        CHECK(rec.loss.total < prev);
        REQUIRE(rec.eta.has_value());
        CHECK(*rec.eta > 0.0);
        CHECK(*rec.eta == run.steps[k].eta);
        CHECK(run.steps[k].phi_after < run.steps[k].phi_before);
        CHECK(run.steps[k].phi_after == doctest::Approx(rec.loss.total).epsilon(1e-9));
        prev = rec.loss.total;
      }
    }
  }

  TEST_CASE("one iteration matches a manual line search") {
    const RowMatrix fc = oracle::random_matrix(5, 4, 20);
    const RowMatrix fs = oracle::random_matrix(6, 4, 24, 0.0, 1.5);
    const LineSearchRun run = ls_ft_detailed(fm(fc), fm(fs), TransformConfig::line_search());
    REQUIRE(run.steps.size() == 1);

    Instance in;
    in.fc = oracle::centered(fc);
    in.fs = oracle::centered(fs);
    in.ft = in.fc;
    in.lambda = run.result.trace.initial.lambda;
    in.d = gradient(fm(in.ft), fm(in.fc), fm(in.fs), in.lambda).d;
    const oracle::GridMin g = oracle::grid_argmin([&](double e) { return phi_oracle(in, e); }, 1e-4,
                                                  3.0 * run.steps[0].eta, 1e-4);
    CHECK(std::abs(run.steps[0].eta - g.x) <= 2e-3);
  }

  TEST_CASE("recentering does not change the result") {
    const RowMatrix fc = oracle::random_matrix(7, 5, 30, 2.0);
    const RowMatrix fs = oracle::random_matrix(8, 5, 35, -1.0, 2.0);
    TransformConfig cfg = TransformConfig::line_search();
    cfg.iterations = 5;
    cfg.perturbation = Perturbation{1, 0.3};
    const TransformResult on = ls_ft(fm(fc), fm(fs), cfg);
    cfg.recenter_each_step = false;
    const TransformResult off = ls_ft(fm(fc), fm(fs), cfg);
    CHECK(oracle::rel_frobenius(on.output.mat(), off.output.mat()) <= 1e-8);
  }

  TEST_CASE("stationary iterations are recorded without a step when early stop is off") {
    const RowMatrix f = oracle::random_matrix(2, 3, 10);
    TransformConfig cfg = TransformConfig::line_search();
    cfg.iterations = 3;
    cfg.early_stop = false;
    const TransformResult r = ls_ft(fm(f), fm(f), cfg);
    REQUIRE(r.trace.records.size() == 3);
    for (const auto& rec : r.trace.records) CHECK_FALSE(rec.eta.has_value());
  }

  TEST_CASE("needs line-search mode") {
    const FeatureMatrix f = fm(oracle::random_matrix(1, 2, 5));
    CHECK_THROWS_AS(ls_ft(f, f, TransformConfig::fixed_step()), ShapeError);
  }
}
