#include <doctest.h>

#include <cmath>

#include "led/critic.hpp"
#include "led/linalg.hpp"
#include "led/training.hpp"

using namespace led;

namespace {

CriticNet zeroed_critic(bool penalty) {
  CriticArchConfig cfg;
  cfg.hidden = 4;
  cfg.depth = 1;
  cfg.penalty = penalty;
  CriticNet net = make_toy_critic(cfg);
  Rng rng(1);
  net.init_params(rng);
  for (auto& p : net.params().params()) p.value.zero();
  return net;
}

GeneratorNet identity_generator_2d() {
  std::vector<LayerSpec> layers{LinearLayer{2}};
  GeneratorNet net(2, std::move(layers));
  Rng rng(2);
  net.init_params(rng);
  net.params().at("layer0.weight").value = Tensor::identity(2);
  return net;
}

}  // namespace

TEST_SUITE("critic.perpendicular") {
  TEST_CASE("axis-aligned projection keeps the dropped coordinate") {
    Tensor w({1, 2}, {1.0, 0.0});
    Tensor x = Tensor::vector({3.0, 4.0});
    Tensor perp = perpendicular_component(w, x);
    CHECK(perp[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(perp[1] == doctest::Approx(4.0).epsilon(1e-14));
  }

  TEST_CASE("a row-space vector has zero perpendicular component") {
    Rng rng(7);
    Tensor w({2, 5});
    for (auto& v : w.flat()) v = rng.gaussian();
    // x = w^T v lies in the row space by construction.
    Tensor x({5});
    const double v0 = rng.gaussian(), v1 = rng.gaussian();
    for (std::size_t j = 0; j < 5; ++j) x[j] = w.at(0, j) * v0 + w.at(1, j) * v1;
    Tensor perp = perpendicular_component(w, x);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(perp[j]) < 1e-12);
  }

  TEST_CASE("orthogonality and decomposition hold at random inputs") {
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
      Tensor w({3, 6});
      for (auto& v : w.flat()) v = rng.gaussian();
      Tensor x({6});
      for (auto& v : x.flat()) v = rng.gaussian();
      Tensor perp = perpendicular_component(w, x);
      // <t_perp, w_i> = 0 for every row.
      for (std::size_t r = 0; r < 3; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < 6; ++j) dot += perp[j] * w.at(r, j);
        CHECK(std::abs(dot) < 1e-10);
      }
      // x = t_perp + projection.
      Tensor proj = row_space_projector_qr(w);
      for (std::size_t j = 0; j < 6; ++j) {
        double pj = 0.0;
        for (std::size_t l = 0; l < 6; ++l) pj += proj.at(j, l) * x[l];
        CHECK(x[j] == doctest::Approx(perp[j] + pj).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("penalty equals the QR-projection residual norm") {
    // Wide-then-narrow critic layer; independent oracle via Householder QR.
    Rng rng(27);
    Tensor w({2, 6});
    for (auto& v : w.flat()) v = rng.gaussian();
    Tensor x({6});
    for (auto& v : x.flat()) v = rng.gaussian();

    Tensor perp = perpendicular_component(w, x);
    double norm = 0.0;
    for (std::size_t j = 0; j < 6; ++j) norm += perp[j] * perp[j];
    norm = std::sqrt(norm);

    Tensor proj = row_space_projector_qr(w);
    double expected = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      double pj = 0.0;
      for (std::size_t l = 0; l < 6; ++l) pj += proj.at(j, l) * x[l];
      expected += (x[j] - pj) * (x[j] - pj);
    }
    expected = std::sqrt(expected);
    CHECK(norm == doctest::Approx(expected).epsilon(1e-10));
  }

  TEST_CASE("rank-deficient weight is an error") {
    Tensor w({2, 3}, {1.0, 2.0, 3.0, 2.0, 4.0, 6.0});
    Tensor x = Tensor::vector({1.0, 1.0, 1.0});
    CHECK_THROWS_AS(perpendicular_component(w, x), NumericalError);
  }
}

TEST_SUITE("critic.log_density") {
  TEST_CASE("zeroed network with penalty disabled is the uniform log-density 0") {
    CriticNet net = zeroed_critic(false);
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
      const double x[2] = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
      CHECK(critic_log_density_point(net, x) == 0.0);
    }
  }

  TEST_CASE("positivity: exp(log N) is positive and finite under fuzzing") {
    CriticArchConfig cfg;
    CriticNet net = make_toy_critic(cfg);
    Rng rng(33);
    net.init_params(rng);
    for (int rep = 0; rep < 200; ++rep) {
      const double x[2] = {rng.uniform(-50, 50), rng.uniform(-50, 50)};
      const double logn = critic_log_density_point(net, x);
      CHECK(std::isfinite(logn));
      CHECK(std::exp(logn) > 0.0);
    }
  }

  TEST_CASE("penalty monotonicity: off-row-space excursions strictly grow the penalty") {
    // Direct mechanism check: for w = (1,0) the penalty of x0 + t*e_y is |t|.
    Tensor w({1, 2}, {1.0, 0.0});
    double prev = -1.0;
    for (double t : {0.0, 0.5, 1.0, 2.5}) {
      Tensor x = Tensor::vector({0.7, t});
      Tensor perp = perpendicular_component(w, x);
      const double norm = std::hypot(perp[0], perp[1]);
      CHECK(norm == doctest::Approx(t).epsilon(1e-12));
      CHECK(norm > prev);
      prev = norm;
    }

    // Net-level effect: a generic critic scores strictly lower with the
    // penalty enabled than without it.
    CriticArchConfig cfg;
    cfg.hidden = 3;
    cfg.depth = 1;
    cfg.penalty = true;
    CriticNet net = make_toy_critic(cfg);
    Rng rng(43);
    net.init_params(rng);
    const double x[2] = {0.8, -0.3};
    const double with_penalty = critic_log_density_point(net, x);
    net.penalty_enabled = false;
    const double without_penalty = critic_log_density_point(net, x);
    CHECK(with_penalty < without_penalty);
  }

  TEST_CASE("config round trip preserves the stack and knobs") {
    CriticArchConfig cfg;
    cfg.hidden = 5;
    cfg.depth = 2;
    cfg.penalty = false;
    cfg.output_scale = 0.25;
    CriticNet net = make_toy_critic(cfg);
    const std::string json = net.config_json();
    CriticNet back = CriticNet::from_config_json(json);
    CHECK(back.config_json() == json);
    CHECK(back.input_dim() == 2);
    CHECK(back.output_scale == 0.25);
    CHECK_FALSE(back.penalty_enabled);
  }
}

TEST_SUITE("critic.alpha") {
  TEST_CASE("zero-variance stub: mean is exactly c and std exactly zero") {
    GeneratorNet gen = identity_generator_2d();
    SamplingPolicy policy;
    policy.replace_prob = 0.05;
    policy.marginal_samples = 4;
    const double log_c = 1.37;
    Rng rng(5);
    // Stub: log N = log Q + log c computed from the samples' own densities.
    MixtureSamples samples = draw_mixture_samples(gen, policy, 64, rng, NetMode::kEval);
    Tensor log_n = samples.log_q;
    for (std::size_t i = 0; i < log_n.size(); ++i) log_n[i] += log_c;
    AlphaEstimate est = alpha_from_log_weights(log_n, samples.log_q);
    CHECK(est.mean == std::exp(log_c));
    CHECK(est.stddev == 0.0);
    CHECK(est.n_samples == 64);
  }

  TEST_CASE("uniform critic: estimate equals a direct recomputation") {
    GeneratorNet gen = identity_generator_2d();
    SamplingPolicy policy;
    policy.replace_prob = 0.0;
    Rng rng_a(9), rng_b(9);
    AlphaOptions tracked;
    tracked.exact_divisor = false;
    AlphaEstimate est = estimate_alpha_with(
        [](const Tensor& values) { return Tensor::zeros({values.rows()}); }, gen, policy, 128,
        rng_a, tracked);
    MixtureSamples samples = draw_mixture_samples(gen, policy, 128, rng_b, NetMode::kEval);
    double mean = 0.0;
    for (std::size_t i = 0; i < 128; ++i) mean += std::exp(-samples.log_q[i]);
    mean /= 128.0;
    CHECK(est.mean == doctest::Approx(mean).epsilon(1e-12));
  }

  TEST_CASE("std shrinks like 1/sqrt(n)") {
    // Fixed non-degenerate critic whose importance weights have finite
    // variance against the Gaussian-tailed sampler (log N decays faster than
    // the proposal). A factor-2 window around sqrt(1024/64) = 4 is asserted.
    GeneratorNet gen = identity_generator_2d();
    SamplingPolicy policy;
    policy.replace_prob = 0.05;
    policy.marginal_samples = 4;
    CriticFn critic_fn = [](const Tensor& values) {
      Tensor out({values.rows()});
      for (std::size_t i = 0; i < values.rows(); ++i) {
        const double x = values.at(i, 0), y = values.at(i, 1);
        out[i] = -0.7 * (x * x + y * y) + 0.2 * x - 0.1;
      }
      return out;
    };

    auto std_at = [&](std::size_t n) {
      const std::size_t repeats = 48;
      std::vector<double> means(repeats);
      Rng rng(77);
      for (std::size_t r = 0; r < repeats; ++r) {
        Rng run = rng.fork("rep", r * 1000 + n);
        means[r] = estimate_alpha_with(critic_fn, gen, policy, n, run).mean;
      }
      double m = 0.0;
      for (double v : means) m += v;
      m /= repeats;
      double ss = 0.0;
      for (double v : means) ss += (v - m) * (v - m);
      return std::sqrt(ss / (repeats - 1));
    };
    const double ratio = std_at(64) / std_at(1024);
    CHECK(ratio > 2.0);   // 4 within a factor of 2
    CHECK(ratio < 8.0);
  }

  TEST_CASE("n = 0 is an error") {
    GeneratorNet gen = identity_generator_2d();
    SamplingPolicy policy;
    Rng rng(1);
    CHECK_THROWS_AS(
        estimate_alpha_with([](const Tensor& v) { return Tensor::zeros({v.rows()}); }, gen,
                            policy, 0, rng),
        ValidationError);
  }
}

TEST_SUITE("critic.p_theta") {
  TEST_CASE("uniform critic with a volume alpha gives -log volume") {
    CriticNet net = zeroed_critic(false);
    AlphaEstimate alpha;
    alpha.mean = 4.0;  // pretend N integrates to 4 (uniform over a 2x2 box)
    alpha.log_mean = std::log(4.0);
    alpha.n_samples = 1;
    const double x[2] = {0.1, 0.2};
    CHECK(log_p_theta(net, alpha, x) == doctest::Approx(-std::log(4.0)).epsilon(1e-14));
  }

  TEST_CASE("ranking of two points is invariant to alpha") {
    CriticArchConfig cfg;
    CriticNet net = make_toy_critic(cfg);
    Rng rng(65);
    net.init_params(rng);
    const double a[2] = {0.5, 0.5}, b[2] = {-1.0, 0.25};
    AlphaEstimate small{0.5, 0.0, 1, std::log(0.5)};
    AlphaEstimate large{50.0, 0.0, 1, std::log(50.0)};
    const bool order_small = log_p_theta(net, small, a) > log_p_theta(net, small, b);
    const bool order_large = log_p_theta(net, large, a) > log_p_theta(net, large, b);
    CHECK(order_small == order_large);
  }

  TEST_CASE("non-positive alpha is rejected") {
    CriticNet net = zeroed_critic(false);
    AlphaEstimate alpha;  // mean = 0
    const double x[2] = {0, 0};
    CHECK_THROWS_AS(log_p_theta(net, alpha, x), ValidationError);
  }
}
