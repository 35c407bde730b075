#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "led/metrics.hpp"
#include "led/training.hpp"

using namespace led;

TEST_SUITE("data.gmm") {
  TEST_CASE("ring geometry: first and fifth modes, nearest distance") {
    GmmSpec spec = ring_spec(8, 1.0, 0.01);
    CHECK(spec.means[0][0] == doctest::Approx(1.0));
    CHECK(spec.means[0][1] == doctest::Approx(0.0));
    CHECK(spec.means[4][0] == doctest::Approx(-1.0));
    CHECK(spec.means[4][1] == doctest::Approx(0.0).epsilon(1e-12));
    // Pairwise nearest-mode distance 2 sin(pi/8) r.
    double nearest = 1e9;
    for (std::size_t i = 1; i < 8; ++i) {
      const double dx = spec.means[i][0] - spec.means[0][0];
      const double dy = spec.means[i][1] - spec.means[0][1];
      nearest = std::min(nearest, std::hypot(dx, dy));
    }
    CHECK(nearest == doctest::Approx(2.0 * std::sin(std::numbers::pi / 8.0)).epsilon(1e-12));
    // Default sigma keeps the 3-sigma discs disjoint.
    CHECK(nearest > 6.0 * spec.sigma);
  }

  TEST_CASE("grid geometry: counts, centering, interior spacing") {
    GmmSpec spec = grid_spec(5, 1.0, 0.05);
    CHECK(spec.mode_count() == 25);
    double cx = 0, cy = 0;
    for (const auto& m : spec.means) {
      cx += m[0];
      cy += m[1];
    }
    CHECK(std::abs(cx) < 1e-12);
    CHECK(std::abs(cy) < 1e-12);
    // Nearest-mode distance equals the spacing on the interior.
    const auto& center = spec.means[12];  // (0,0) in a 5x5 grid
    double nearest = 1e9;
    for (const auto& m : spec.means) {
      const double d = std::hypot(m[0] - center[0], m[1] - center[1]);
      if (d > 0) nearest = std::min(nearest, d);
    }
    CHECK(nearest == doctest::Approx(1.0));
    CHECK(grid_spec(1, 1.0, 0.05).mode_count() == 1);
    CHECK(nearest > 6.0 * spec.sigma);
  }

  TEST_CASE("log density: single mode at origin and exact normalization") {
    GmmSpec one;
    one.means = {{0.0, 0.0}};
    one.weights = {1.0};
    one.sigma = 1.0;
    CHECK(gmm_log_density(one, 0, 0) ==
          doctest::Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

    DensityGrid g = density_grid(gmm_density_fn(one), GridBounds{-7, 7, -7, 7}, 200);
    CHECK(g.integral == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("sample mean of the ring concentrates at the origin") {
    GmmSpec spec = ring_spec();
    Rng rng(7);
    Tensor pts = sample_gmm(spec, 100000, rng);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      mx += pts.at(i, 0);
      my += pts.at(i, 1);
    }
    mx /= pts.rows();
    my /= pts.rows();
    // Component means are on the unit circle: per-axis std is about 0.71.
    const double se = 3.0 * 0.75 / std::sqrt(100000.0);
    CHECK(std::abs(mx) < se);
    CHECK(std::abs(my) < se);
  }

  TEST_CASE("dataset CSV round trip") {
    GmmSpec spec = ring_spec();
    Rng rng(9);
    Tensor pts = sample_gmm(spec, 64, rng);
    const std::string path = "test_dataset_roundtrip.csv";
    export_dataset_csv(pts, path);
    Tensor back = import_dataset_csv(path);
    REQUIRE(back.rows() == 64);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(back[i] == pts[i]);
    std::remove(path.c_str());

    GmmSpec parsed = gmm_spec_from_json(gmm_spec_json(spec));
    CHECK(parsed.mode_count() == 8);
    CHECK(parsed.sigma == spec.sigma);
  }
}

TEST_SUITE("metrics.hq") {
  TEST_CASE("samples exactly at modes: 100% HQ, all hit modes captured") {
    GmmSpec spec = ring_spec(4, 1.0, 0.05);
    Tensor samples({8, 2});
    for (int i = 0; i < 8; ++i) {
      samples.at(i, 0) = spec.means[i % 3][0];
      samples.at(i, 1) = spec.means[i % 3][1];
    }
    HqResult hq = hq_and_modes(samples, spec);
    CHECK(hq.hq_percent == 100.0);
    CHECK(hq.modes_captured == 3);
    CHECK(hq.modes_captured_strict == 3);
  }

  TEST_CASE("samples at 4 sigma: nothing is high quality") {
    GmmSpec spec = ring_spec(4, 1.0, 0.05);
    Tensor samples({4, 2});
    for (int i = 0; i < 4; ++i) {
      samples.at(i, 0) = spec.means[i][0] + 4.0 * spec.sigma;
      samples.at(i, 1) = spec.means[i][1];
    }
    HqResult hq = hq_and_modes(samples, spec);
    CHECK(hq.hq_percent == 0.0);
    CHECK(hq.modes_captured == 0);
  }

  TEST_CASE("invariant under joint rigid rotation of samples and spec") {
    GmmSpec spec = ring_spec(8, 1.0, 0.01);
    Rng rng(11);
    Tensor samples = sample_gmm(spec, 500, rng);
    HqResult base = hq_and_modes(samples, spec);

    const double c = std::cos(0.83), s = std::sin(0.83);
    GmmSpec rotated = spec;
    for (auto& m : rotated.means) {
      const double x = m[0], y = m[1];
      m[0] = c * x - s * y;
      m[1] = s * x + c * y;
    }
    Tensor rsamples({500, 2});
    for (std::size_t i = 0; i < 500; ++i) {
      const double x = samples.at(i, 0), y = samples.at(i, 1);
      rsamples.at(i, 0) = c * x - s * y;
      rsamples.at(i, 1) = s * x + c * y;
    }
    HqResult rot = hq_and_modes(rsamples, rotated);
    CHECK(rot.hq_percent == doctest::Approx(base.hq_percent));
    CHECK(rot.modes_captured == base.modes_captured);
  }

  TEST_CASE("empty batch is an error") {
    GmmSpec spec = ring_spec();
    CHECK_THROWS_AS(hq_and_modes(Tensor({1}), spec), ValidationError);
  }
}

TEST_SUITE("metrics.bpd") {
  TEST_CASE("uniform density on the unit square gives 0 bits per dim") {
    // Stubbed model: log N = 0 everywhere and alpha = 1 (its exact integral
    // over the unit square), so -log P = 0.
    CriticArchConfig cfg;
    cfg.hidden = 4;
    cfg.depth = 1;
    cfg.penalty = false;
    CriticNet critic = make_toy_critic(cfg);
    Rng rng(13);
    critic.init_params(rng);
    for (auto& p : critic.params().params()) p.value.zero();
    AlphaEstimate alpha{1.0, 0.0, 1, 0.0};

    Tensor data({16, 2});
    for (auto& v : data.flat()) v = rng.uniform(0, 1);
    BitsPerDim bpd = bits_per_dim(critic, alpha, data);
    CHECK(bpd.bits_per_dim == 0.0);
    CHECK(bpd.nats_per_dim == 0.0);
  }

  TEST_CASE("exact GMM density matches an independent cross-entropy estimate") {
    // Feed the exact data log-density through the bits/dim formula by
    // stubbing: evaluate -log P_data(x)/(D ln 2) directly.
    GmmSpec spec = ring_spec(8, 1.0, 0.05);
    Rng rng(17);
    Tensor data = sample_gmm(spec, 4000, rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      acc += -gmm_log_density(spec, data.at(i, 0), data.at(i, 1));
    }
    const double nats_direct = acc / (2.0 * data.rows());
    // The Monte Carlo cross-entropy of the GMM with itself is its entropy;
    // a second independent draw must agree within sampling error.
    Rng rng2(19);
    Tensor data2 = sample_gmm(spec, 4000, rng2);
    double acc2 = 0.0;
    for (std::size_t i = 0; i < data2.rows(); ++i) {
      acc2 += -gmm_log_density(spec, data2.at(i, 0), data2.at(i, 1));
    }
    const double nats_repeat = acc2 / (2.0 * data2.rows());
    CHECK(nats_direct == doctest::Approx(nats_repeat).epsilon(0.05));
  }

  TEST_CASE("identity generator reports the prior entropy rate") {
    std::vector<LayerSpec> layers{LinearLayer{2}};
    GeneratorNet gen(2, std::move(layers));
    Rng rng(21);
    gen.init_params(rng);
    gen.params().at("layer0.weight").value = Tensor::identity(2);
    BitsPerDim bpd = generator_bits_per_dim(gen, 20000, rng);
    // H(N(0, I_2)) / 2 per dimension, in nats.
    const double expected = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
    CHECK(bpd.nats_per_dim == doctest::Approx(expected).epsilon(0.02));
    CHECK(bpd.bits_per_dim == doctest::Approx(expected / std::numbers::ln2).epsilon(0.02));
  }
}

TEST_SUITE("metrics.grid") {
  TEST_CASE("constant log density integrates to exp(c) times the area") {
    const double c = -1.3;
    DensityGrid g =
        density_grid([c](double, double) { return c; }, GridBounds{0, 2, 0, 3}, 50);
    CHECK(g.integral == doctest::Approx(std::exp(c) * 6.0).epsilon(1e-9));
  }

  TEST_CASE("standard normal integrates to 1 on [-6,6]^2 at 200 nodes") {
    auto fn = [](double x, double y) {
      const double p[2] = {x, y};
      return standard_gaussian_log_density(p);
    };
    DensityGrid g = density_grid(fn, GridBounds{-6, 6, -6, 6}, 200);
    CHECK(g.integral == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("grid KL of a density with itself is exactly zero") {
    GmmSpec spec = ring_spec(8, 1.0, 0.05);
    DensityGrid g = density_grid(gmm_density_fn(spec), default_bounds(spec), 101);
    CHECK(grid_kl(g, g) == 0.0);
  }

  TEST_CASE("grid KL separates the ring from a flat density") {
    GmmSpec spec = ring_spec(8, 1.0, 0.05);
    const GridBounds bounds = default_bounds(spec);
    DensityGrid p = density_grid(gmm_density_fn(spec), bounds, 101);
    DensityGrid q = density_grid([](double, double) { return 0.0; }, bounds, 101);
    CHECK(grid_kl(p, q) > 0.5);
  }

  TEST_CASE("two-scale integration matches a brute single fine grid") {
    GmmSpec spec = ring_spec(8, 1.0, 0.01);  // sharp ridges
    const double coarse_only =
        density_grid(gmm_density_fn(spec), GridBounds{-6, 6, -6, 6}, 201).integral;
    const double two_scale = integrate_density_two_scale(
        gmm_density_fn(spec), GridBounds{-6, 6, -6, 6}, 201,
        GridBounds{-1.3, 1.3, -1.3, 1.3}, 1301);
    CHECK(two_scale == doctest::Approx(1.0).epsilon(0.01));
    // The coarse grid alone badly misrepresents the sharp ring.
    CHECK(std::abs(coarse_only - 1.0) > 0.05);
  }

  TEST_CASE("csv export writes header, rows and sidecar") {
    DensityGrid g =
        density_grid([](double, double) { return 0.0; }, GridBounds{0, 1, 0, 1}, 3);
    export_density_grid_csv(g, "test_grid.csv", "test_grid.json");
    std::ifstream is("test_grid.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "x,y,log_density");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line)) rows += line.empty() ? 0 : 1;
    CHECK(rows == 9);
    std::remove("test_grid.csv");
    std::remove("test_grid.json");
  }
}

TEST_SUITE("metrics.alpha_study") {
  TEST_CASE("zero-variance stub yields an all-zero std column") {
    std::vector<LayerSpec> layers{LinearLayer{2}};
    GeneratorNet gen(2, std::move(layers));
    Rng rng(23);
    gen.init_params(rng);
    SamplingPolicy policy;
    policy.replace_prob = 0.05;
    policy.marginal_samples = 4;

    // The stub must know each sample's attached density; reproduce it by
    // construction: alpha weights become exactly c when log N = log Q + log c.
    // alpha_convergence_study uses the net-level API, so pin the critic to a
    // function of the evaluated points via the evaluator.
    GeneratorEvaluator evaluator(gen);
    const double log_c = 0.4;
    CriticFn stub = [&gen, &policy, log_c, &evaluator](const Tensor& values) {
      Tensor out({values.rows()});
      Rng fixed(3);
      for (std::size_t i = 0; i < values.rows(); ++i) {
        const double p[2] = {values.at(i, 0), values.at(i, 1)};
        const double lg = evaluator.log_density_at(p, fixed, 1);
        out[i] = mixture_log_density_value(lg, standard_gaussian_log_density(p),
                                           policy.replace_prob) +
                 log_c;
      }
      return out;
    };
    Rng study_rng(29);
    AlphaOptions tracked;
    tracked.exact_divisor = false;
    auto table = alpha_convergence_study(stub, gen, policy, {4, 16}, 5, study_rng, tracked);
    REQUIRE(table.size() == 2);
    for (const auto& row : table) {
      CHECK(row.mean == doctest::Approx(std::exp(log_c)).epsilon(1e-12));
      CHECK(row.stddev == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  TEST_CASE("repeats below 2 are rejected") {
    std::vector<LayerSpec> layers{LinearLayer{2}};
    GeneratorNet gen(2, std::move(layers));
    Rng rng(31);
    gen.init_params(rng);
    SamplingPolicy policy;
    CriticFn stub = [](const Tensor& v) { return Tensor::zeros({v.rows()}); };
    CHECK_THROWS_AS(alpha_convergence_study(stub, gen, policy, {4}, 1, rng), ValidationError);
  }
}
