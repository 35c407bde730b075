#include "led/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <numeric>

#include "led/linalg.hpp"

namespace led {

double gradient_check(const ScalarGraphFn& fn, const std::vector<Tensor>& inputs, double step) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
  Var root = fn(tape, leaves);
  tape.backward(root);

  auto eval_at = [&fn](const std::vector<Tensor>& xs) {
    Tape t2;
    std::vector<Var> ls;
    ls.reserve(xs.size());
    for (const auto& x : xs) ls.push_back(t2.leaf(x, false));
    return fn(t2, ls)->value.as_scalar();
  };

  double worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    const Tensor analytic = leaves[which]->grad.empty()
                                ? Tensor::zeros(inputs[which].shape())
                                : leaves[which]->grad;
    for (std::size_t i = 0; i < probe[which].size(); ++i) {
      const double saved = probe[which][i];
      probe[which][i] = saved + step;
      const double up = eval_at(probe);
      probe[which][i] = saved - step;
      const double down = eval_at(probe);
      probe[which][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double brute_force_det(const Tensor& a) {
  const std::size_t n = a.rows();
  if (n != a.cols() || n > 8) fail_validation("brute_force_det: needs square n <= 8");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double det = 0.0;
  // Walk every permutation; track parity by counting inversions.
  do {
    std::size_t inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j] ? 1 : 0;
    double prod = inversions % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) prod *= a.at(i, perm[i]);
    det += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

Tensor generator_jacobian_at(GeneratorNet& net, const Tensor& z) {
  const std::size_t d_in = net.latent_dim();
  const std::size_t d_out = net.output_dim();
  Tape tape;
  BoundParams bound = bind_params(tape, net.params(), false);
  Var zv = tape.leaf(z.reshaped({1, d_in}), true);
  Rng unused(0);
  // Rebuild the forward from the leaf so gradients reach z.
  TrackedBatch s{zv, tape.constant(Tensor({1}))};
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& layer = net.layers()[k];
    if (std::holds_alternative<LinearLayer>(layer)) {
      s = linear_forward(s, bound.at(GeneratorNet::param_name(k, "weight")),
                         bound.at(GeneratorNet::param_name(k, "bias")));
    } else if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
      s = activation_forward(s, act->params);
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      s = batchnorm_forward(s, bound.at(GeneratorNet::param_name(k, "gamma")),
                            bound.at(GeneratorNet::param_name(k, "beta")),
                            net.params().at(GeneratorNet::param_name(k, "running_mean")).value,
                            net.params().at(GeneratorNet::param_name(k, "running_var")).value,
                            bn->eps);
    } else {
      fail_validation("generator_jacobian_at: only dimension-preserving layers supported");
    }
  }
  Tensor jac({d_out, d_in});
  for (std::size_t i = 0; i < d_out; ++i) {
    Var yi = reshape(slice_cols(s.values, i, i + 1), {1});
    tape.backward(yi);
    for (std::size_t j = 0; j < d_in; ++j) jac.at(i, j) = zv->grad[j];
    zv->grad.zero();
  }
  return jac;
}

GeneratorNet random_preserving_stack(std::size_t dim, std::size_t depth, Rng& rng) {
  std::vector<LayerSpec> layers;
  for (std::size_t k = 0; k < depth; ++k) {
    const double pick = rng.uniform();
    if (pick < 0.4) {
      layers.push_back(LinearLayer{dim});
    } else if (pick < 0.7) {
      SmoothReluParams p;
      p.alpha = rng.uniform(3.0, 8.0);
      p.beta = rng.uniform(0.5, 1.5);
      p.u0 = rng.uniform(-0.5, 0.5);
      p.t0 = rng.uniform(-0.5, 0.5);
      layers.push_back(ActivationLayer{p});
    } else {
      layers.push_back(BatchNormLayer{dim});
    }
  }
  layers.push_back(LinearLayer{dim});  // at least one parameterized layer
  GeneratorNet net(dim, std::move(layers));
  net.init_params(rng);
  // Perturb away from the tidy initial state: scaled rotations, random
  // shifts, non-unit batch-norm statistics.
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    if (std::holds_alternative<LinearLayer>(net.layers()[k])) {
      Tensor& w = net.params().at(GeneratorNet::param_name(k, "weight")).value;
      for (std::size_t i = 0; i < dim; ++i) {
        const double s = std::exp(rng.uniform(-0.4, 0.4));
        for (std::size_t j = 0; j < dim; ++j) w.at(i, j) *= s;
      }
      Tensor& b = net.params().at(GeneratorNet::param_name(k, "bias")).value;
      for (std::size_t j = 0; j < dim; ++j) b[j] = rng.uniform(-0.5, 0.5);
    } else if (std::holds_alternative<BatchNormLayer>(net.layers()[k])) {
      Tensor& gamma = net.params().at(GeneratorNet::param_name(k, "gamma")).value;
      Tensor& beta = net.params().at(GeneratorNet::param_name(k, "beta")).value;
      Tensor& mean = net.params().at(GeneratorNet::param_name(k, "running_mean")).value;
      Tensor& var = net.params().at(GeneratorNet::param_name(k, "running_var")).value;
      for (std::size_t j = 0; j < dim; ++j) {
        gamma[j] = std::exp(rng.uniform(-0.5, 0.5));
        beta[j] = rng.uniform(-0.5, 0.5);
        mean[j] = rng.uniform(-0.5, 0.5);
        var[j] = std::exp(rng.uniform(-0.5, 0.5));
      }
    }
  }
  return net;
}

double change_of_variable_worst_error(std::size_t cases, Rng& rng) {
  double worst = 0.0;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t dim = 1 + rng.below(4);
    const std::size_t depth = 2 + rng.below(5);
    GeneratorNet net = random_preserving_stack(dim, depth, rng);
    Tensor z({dim});
    for (std::size_t j = 0; j < dim; ++j) z[j] = rng.gaussian();

    Rng noise(0);
    TrackedSample tracked = generator_forward_sample(net, z, noise);
    const Tensor jac = generator_jacobian_at(net, z);
    const double expected =
        standard_gaussian_log_density({z.data(), dim}) - slogdet(jac).log_abs_det;
    worst = std::max(worst, std::abs(tracked.log_density - expected));
  }
  return worst;
}

double conv_logdet_worst_error(std::size_t cases, Rng& rng) {
  double worst = 0.0;
  std::size_t done = 0;
  while (done < cases) {
    CircularConvLayer spec;
    spec.channels = 1 + rng.below(2);
    spec.height = 1 + rng.below(6);
    spec.width = rng.bernoulli(0.3) ? 1 : 1 + rng.below(6);
    spec.ksize_h = 1 + rng.below(std::min<std::size_t>(3, spec.height));
    spec.ksize_w = 1 + rng.below(std::min<std::size_t>(3, spec.width));
    Tensor kernel({spec.channels, spec.channels, spec.ksize_h, spec.ksize_w});
    for (std::size_t i = 0; i < kernel.size(); ++i) kernel[i] = rng.gaussian();
    double fft_val, dense_val;
    try {
      fft_val = circular_conv_logdet_fft(kernel, spec);
      dense_val = slogdet(circular_conv_dense_matrix(kernel, spec)).log_abs_det;
    } catch (const NumericalError&) {
      continue;  // near-singular draw; resample
    }
    const double err = std::abs(fft_val - dense_val) / std::max(1.0, std::abs(dense_val));
    worst = std::max(worst, err);
    ++done;
  }
  return worst;
}

// ---- suites ----

namespace {

VerifyCheck make_check(std::string name, double err, double tol) {
  return {std::move(name), err, tol, err <= tol};
}

VerifyReport logdet_suite(std::uint64_t seed) {
  Rng rng(seed);
  VerifyReport report;
  report.suite = "logdet";

  {
    double worst = 0.0;
    for (int c = 0; c < 10; ++c) {
      Tensor a({3, 3});
      for (std::size_t i = 0; i < 9; ++i) a[i] = rng.uniform(-2.0, 2.0);
      double det;
      try {
        det = brute_force_det(a);
        if (std::abs(det) < 1e-6) continue;
        const double lu_val = slogdet(a).log_abs_det;
        worst = std::max(worst, std::abs(lu_val - std::log(std::abs(det))));
      } catch (const NumericalError&) {
        continue;
      }
    }
    report.checks.push_back(make_check("lu-vs-cofactor-3x3", worst, 1e-10));
  }
  {
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
      const std::size_t n = 2 + rng.below(5);
      Tensor a({n, n});
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.gaussian();
      try {
        const double det = brute_force_det(a);
        if (std::abs(det) < 1e-6) continue;
        const auto sld = slogdet(a);
        worst = std::max(worst, std::abs(sld.log_abs_det - std::log(std::abs(det))));
        worst = std::max(worst, std::abs(sld.sign - (det > 0 ? 1.0 : -1.0)));
      } catch (const NumericalError&) {
        continue;
      }
    }
    report.checks.push_back(make_check("lu-vs-permutation-expansion", worst, 1e-9));
  }
  {
    Tensor two_i = Tensor::identity(2);
    two_i.at(0, 0) = two_i.at(1, 1) = 2.0;
    const double err = std::abs(slogdet(two_i).log_abs_det - 2.0 * std::log(2.0));
    report.checks.push_back(make_check("diagonal-exact", err, 1e-14));
  }

  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

VerifyReport conv_suite(std::uint64_t seed) {
  Rng rng(seed);
  VerifyReport report;
  report.suite = "conv";

  {
    CircularConvLayer spec{2, 4, 4, 1, 1};
    Tensor kernel({2, 2, 1, 1});
    kernel[0] = 1.0;
    kernel[3] = 1.0;  // identity mixing
    report.checks.push_back(
        make_check("identity-kernel", std::abs(circular_conv_logdet_fft(kernel, spec)), 1e-12));
  }
  {
    // 1-channel 1D size 4, kernel [a,b]: log|det| = sum_k log|a + b w^k|.
    const double a = 1.7, b = -0.6;
    CircularConvLayer spec{1, 4, 1, 2, 1};
    Tensor kernel({1, 1, 2, 1}, {a, b});
    double expected = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double angle = 2.0 * 3.14159265358979323846 * k / 4.0;
      const std::complex<double> omega(std::cos(angle), std::sin(angle));
      expected += std::log(std::abs(a + b * omega));
    }
    const double err = std::abs(circular_conv_logdet_fft(kernel, spec) - expected);
    report.checks.push_back(make_check("ring-1d-analytic", err, 1e-10));
  }
  report.checks.push_back(
      make_check("fft-vs-dense-30-random", conv_logdet_worst_error(30, rng), 1e-8));

  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

VerifyReport gradcheck_suite(std::uint64_t seed) {
  Rng rng(seed);
  VerifyReport report;
  report.suite = "gradcheck";

  auto rand_t = [&rng](std::vector<std::size_t> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
  };

  struct Case {
    const char* name;
    ScalarGraphFn fn;
    std::vector<Tensor> inputs;
    double tol;
  };
  std::vector<Case> cases;

  cases.push_back({"matmul",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(mul(matmul(v[0], v[1]), matmul(v[0], v[1])));
                   },
                   {rand_t({3, 4}, -1, 1), rand_t({4, 2}, -1, 1)},
                   1e-4});
  cases.push_back({"matmul_nt+add_row",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(vexp(add_row(matmul_nt(v[0], v[1]), v[2])));
                   },
                   {rand_t({3, 4}, -1, 1), rand_t({2, 4}, -1, 1), rand_t({2}, -1, 1)},
                   1e-4});
  cases.push_back({"mul+sub+mean",
                   [](Tape&, const std::vector<Var>& v) {
                     return mean_all(mul(sub(v[0], v[1]), v[0]));
                   },
                   {rand_t({4, 3}, -1, 1), rand_t({4, 3}, -1, 1)},
                   1e-4});
  cases.push_back({"exp_log",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(vlog(vexp(vlog(v[0]))));
                   },
                   {rand_t({3, 3}, 0.5, 2.0)},
                   1e-4});
  cases.push_back({"sum_rows+mul_row+add_col",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(vexp(add_col(mul_row(v[0], v[1]), v[2])));
                   },
                   {rand_t({3, 4}, -1, 1), rand_t({4}, 0.5, 1.5), rand_t({3}, -1, 1)},
                   1e-4});
  cases.push_back({"mul_col",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(mul_col(v[0], v[1]));
                   },
                   {rand_t({3, 4}, -1, 1), rand_t({3}, -2, 2)},
                   1e-4});
  // Ties avoided: entries spaced by > 2*step.
  cases.push_back({"max_rows",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(vexp(max_rows(v[0])));
                   },
                   {Tensor({3, 3}, {0.1, 0.9, 0.4, 0.8, 0.2, 0.3, 0.5, 0.6, 0.95})},
                   1e-2});
  cases.push_back({"max_all",
                   [](Tape&, const std::vector<Var>& v) { return max_all(v[0]); },
                   {Tensor({4}, {0.4, -0.2, 0.9, 0.1})},
                   1e-2});
  cases.push_back({"concat+slice+gather",
                   [](Tape&, const std::vector<Var>& v) {
                     Var c = concat_cols(v[0], v[1]);
                     Var s = slice_cols(c, 1, 4);
                     Var g = gather_cols(s, {0, 2, 2});
                     return sum_all(mul(g, g));
                   },
                   {rand_t({3, 2}, -1, 1), rand_t({3, 3}, -1, 1)},
                   1e-4});
  cases.push_back({"logsumexp_rows",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(logsumexp_rows(v[0]));
                   },
                   {rand_t({3, 4}, -2, 2)},
                   1e-2});
  cases.push_back({"smooth_relu",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(smooth_relu(v[0], SmoothReluParams{}));
                   },
                   {rand_t({3, 4}, -3, 3)},
                   1e-4});
  cases.push_back({"smooth_relu_log_deriv",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(smooth_relu_log_deriv(v[0], SmoothReluParams{}));
                   },
                   {rand_t({3, 4}, -3, 3)},
                   1e-4});
  {
    Tensor a = rand_t({3, 3}, -1, 1);
    for (std::size_t i = 0; i < 3; ++i) a.at(i, i) += 3.0;  // safely non-singular
    cases.push_back({"logdet",
                     [](Tape&, const std::vector<Var>& v) { return logdet(v[0]); },
                     {a},
                     1e-4});
    cases.push_back({"matinv",
                     [](Tape&, const std::vector<Var>& v) {
                       return sum_all(mul(matinv(v[0]), matinv(v[0])));
                     },
                     {a},
                     1e-4});
  }
  cases.push_back({"l2norm_rows",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(l2norm_rows(v[0]));
                   },
                   {rand_t({3, 4}, 0.5, 2.0)},
                   1e-4});
  cases.push_back({"circulant_embed",
                   [](Tape&, const std::vector<Var>& v) {
                     Var dense = circulant_embed(v[0], 1, 3, 3);
                     return sum_all(mul(dense, dense));
                   },
                   {rand_t({1, 1, 2, 2}, -1, 1)},
                   1e-4});
  cases.push_back({"transpose+scale",
                   [](Tape&, const std::vector<Var>& v) {
                     return sum_all(scale(transpose(v[0]), 1.7));
                   },
                   {rand_t({2, 3}, -1, 1)},
                   1e-4});

  for (auto& c : cases) {
    report.checks.push_back(make_check(c.name, gradient_check(c.fn, c.inputs), c.tol));
  }

  // Fan-out: f(x) = g(x) + g(x) must double the gradient of g.
  {
    Tensor x = rand_t({3}, -1, 1);
    Tape tape;
    Var xv = tape.leaf(x, true);
    Var g = sum_all(mul(xv, xv));
    tape.backward(add(g, g));
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(xv->grad[i] - 4.0 * x[i]));
    report.checks.push_back(make_check("fanout-sums-contributions", worst, 1e-12));
  }

  // The two training objectives against finite differences over the full
  // parameter vectors of a small model, with frozen draws.
  {
    GenArchConfig ga;
    ga.width = 4;
    ga.blocks = 1;
    CriticArchConfig ca;
    ca.hidden = 6;
    ca.depth = 2;
    Rng setup(seed ^ 0x1234567);
    GeneratorNet gen = make_toy_generator(ga);
    gen.init_params(setup);
    CriticNet critic = make_toy_critic(ca);
    critic.init_params(setup);
    GmmSpec spec = ring_spec(4, 1.0, 0.1);
    SamplingPolicy policy;
    policy.replace_prob = 0.05;
    policy.marginal_samples = 4;

    // Discriminator loss as a function of the critic parameters.
    {
      Rng data_rng(77);
      Tensor real = sample_gmm(spec, 6, data_rng);
      std::vector<Tensor> inputs;
      std::vector<std::string> names;
      for (const auto& p : critic.params().params()) {
        if (!p.trainable) continue;
        inputs.push_back(p.value);
        names.push_back(p.name);
      }
      CriticNet& critic_ref = critic;
      GeneratorNet& gen_ref = gen;
      auto fn = [&critic_ref, &gen_ref, &real, &names, &policy](
                    Tape& tape, const std::vector<Var>& leaves) {
        BoundParams bound;
        bound.requires_grad = true;
        std::size_t li = 0;
        for (const auto& p : critic_ref.params().params()) {
          if (p.trainable) {
            bound.vars.emplace(p.name, leaves[li++]);
          } else {
            bound.vars.emplace(p.name, tape.constant(p.value));
          }
        }
        (void)names;
        Rng step_rng(4242);
        return build_discriminator_loss(tape, critic_ref, bound, gen_ref, policy, real, 4,
                                        step_rng, NetMode::kEval)
            .total;
      };
      report.checks.push_back(
          make_check("discriminator-loss-fd", gradient_check(fn, inputs), 1e-4));
    }

    // Generator loss as a function of the generator parameters.
    {
      std::vector<Tensor> inputs;
      for (const auto& p : gen.params().params()) {
        if (p.trainable) inputs.push_back(p.value);
      }
      CriticNet& critic_ref = critic;
      GeneratorNet& gen_ref = gen;
      auto fn = [&critic_ref, &gen_ref, &policy](Tape& tape, const std::vector<Var>& leaves) {
        BoundParams bound;
        bound.requires_grad = true;
        std::size_t li = 0;
        for (const auto& p : gen_ref.params().params()) {
          if (p.trainable) {
            bound.vars.emplace(p.name, leaves[li++]);
          } else {
            bound.vars.emplace(p.name, tape.constant(p.value));
          }
        }
        Rng step_rng(515151);
        return build_generator_loss(tape, critic_ref, gen_ref, bound, policy, 4, 0.1, step_rng,
                                    NetMode::kEval)
            .total;
      };
      report.checks.push_back(make_check("generator-loss-fd", gradient_check(fn, inputs), 1e-4));
    }
  }

  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

VerifyReport changevar_suite(std::uint64_t seed) {
  Rng rng(seed);
  VerifyReport report;
  report.suite = "changevar";
  report.checks.push_back(
      make_check("tracked-vs-jacobian-20-stacks", change_of_variable_worst_error(20, rng), 1e-6));
  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

VerifyReport normalization_suite(std::uint64_t seed) {
  Rng rng(seed);
  VerifyReport report;
  report.suite = "normalization";

  {
    auto normal2d = [](double x, double y) {
      const double p[2] = {x, y};
      return standard_gaussian_log_density(p);
    };
    DensityGrid g = density_grid(normal2d, GridBounds{-6, 6, -6, 6}, 200);
    report.checks.push_back(make_check("standard-normal-grid", std::abs(g.integral - 1.0), 0.01));
  }
  {
    const GmmSpec spec = ring_spec();
    const double integral = integrate_density_two_scale(
        gmm_density_fn(spec), GridBounds{-6, 6, -6, 6}, 201, GridBounds{-1.3, 1.3, -1.3, 1.3},
        1301);
    report.checks.push_back(make_check("exact-ring-gmm-grid", std::abs(integral - 1.0), 0.01));
  }
  {
    // Invertible 2D stack: tracked density integrates to 1 on a covering grid.
    GeneratorNet net = random_preserving_stack(2, 4, rng);
    GeneratorEvaluator evaluator(net);
    auto fn = [&evaluator](double x, double y) {
      const double p[2] = {x, y};
      Rng unused(1);
      return evaluator.log_density_at(p, unused, 1);
    };
    DensityGrid g = density_grid(fn, GridBounds{-14, 14, -14, 14}, 361);
    report.checks.push_back(
        make_check("invertible-stack-normalization", std::abs(g.integral - 1.0), 0.02));
  }
  {
    // Inflate + reduce stack; marginalization with 256 proposals per point on
    // a 241-node grid over [-10, 10]^2.
    std::vector<LayerSpec> layers;
    layers.push_back(InflateLayer{2, 1.0});
    layers.push_back(LinearLayer{4});
    layers.push_back(ActivationLayer{});
    layers.push_back(LinearLayer{4});
    layers.push_back(ReduceLayer{2, 0.4});
    GeneratorNet net(2, std::move(layers));
    net.init_params(rng);
    GeneratorEvaluator evaluator(net);
    std::uint64_t mix_seed = seed ^ 0xabcdef;
    auto fn = [&evaluator, mix_seed](double x, double y) {
      const double p[2] = {x, y};
      std::uint64_t bx, by;
      std::memcpy(&bx, &x, 8);
      std::memcpy(&by, &y, 8);
      Rng point_rng(mix_seed ^ (bx * 0x9e3779b97f4a7c15ull) ^ (by >> 3));
      return evaluator.log_density_at(p, point_rng, 256);
    };
    DensityGrid g = density_grid(fn, GridBounds{-10, 10, -10, 10}, 241);
    report.checks.push_back(
        make_check("inflate-reduce-normalization", std::abs(g.integral - 1.0), 0.02));
  }

  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

}  // namespace

std::vector<std::string> verify_suite_names() {
  return {"logdet", "conv", "gradcheck", "changevar", "normalization"};
}

VerifyReport run_verify_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "logdet") return logdet_suite(seed);
  if (suite == "conv") return conv_suite(seed);
  if (suite == "gradcheck") return gradcheck_suite(seed);
  if (suite == "changevar") return changevar_suite(seed);
  if (suite == "normalization") return normalization_suite(seed);
  fail_validation("verify: unknown suite '" + suite + "'");
}

}  // namespace led
