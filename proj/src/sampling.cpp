#include "led/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace led {

double mixture_log_density_value(double log_gen, double log_normal, double p) {
  if (p <= 0.0) return log_gen;
  if (p >= 1.0) return log_normal;
  const double a = std::log1p(-p) + log_gen;
  const double b = std::log(p) + log_normal;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

Var mixture_log_density(const Var& values, const Var& gen_log_density, double p) {
  if (p < 0.0 || p > 1.0) fail_validation("mixture_log_density: replace_prob must be in [0,1]");
  if (p <= 0.0) return gen_log_density;
  Var log_normal = standard_gaussian_log_density_rows(values);
  if (p >= 1.0) return log_normal;
  const std::size_t n = gen_log_density->value.size();
  Var a = reshape(add_const(gen_log_density, std::log1p(-p)), {n, 1});
  Var b = reshape(add_const(log_normal, std::log(p)), {n, 1});
  return logsumexp_rows(concat_cols(a, b));
}

MixtureSamples draw_mixture_samples(GeneratorNet& net, const SamplingPolicy& policy,
                                    std::size_t n, Rng& rng, NetMode mode) {
  if (n == 0) fail_validation("draw_mixture_samples: n must be >= 1");
  const double p = policy.replace_prob;
  if (p < 0.0 || p > 1.0) fail_validation("SamplingPolicy: replace_prob must be in [0,1]");
  const std::size_t d = net.output_dim();

  MixtureSamples out;
  out.replaced.assign(n, 0);
  if (p > 0.0) {
    for (std::size_t i = 0; i < n; ++i) out.replaced[i] = rng.bernoulli(p) ? 1 : 0;
  }

  ForwardSamples fwd = generator_sample_raw(net, n, rng, mode);
  out.values = std::move(fwd.values);
  out.log_q = Tensor({n});

  const bool any_replaced =
      std::any_of(out.replaced.begin(), out.replaced.end(), [](auto r) { return r != 0; });
  std::optional<GeneratorEvaluator> evaluator;
  if (any_replaced && p < 1.0) evaluator.emplace(net);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.replaced[i]) {
      for (std::size_t j = 0; j < d; ++j) out.values.at(i, j) = rng.gaussian();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> row{out.values.data() + i * d, d};
    if (out.replaced[i]) {
      // P_G at a point the generator did not produce: pointwise query. At
      // p = 1 the mixture is the plain normal and the query is skipped.
      const double log_gen =
          p >= 1.0 ? 0.0 : evaluator->log_density_at(row, rng, policy.marginal_samples);
      out.log_q[i] =
          mixture_log_density_value(log_gen, standard_gaussian_log_density(row), p);
    } else {
      out.log_q[i] = mixture_log_density_value(fwd.log_density[i],
                                               standard_gaussian_log_density(row), p);
    }
  }
  return out;
}

TrackedSample sample(const SamplingPolicy& policy, GeneratorNet& net, Rng& rng) {
  MixtureSamples batch = draw_mixture_samples(net, policy, 1, rng, NetMode::kEval);
  TrackedSample s;
  s.value = batch.values.reshaped({batch.values.cols()});
  s.log_density = batch.log_q[0];
  return s;
}

TrackedBatch draw_generator_samples(Tape& tape, GeneratorNet& net, const BoundParams& bound,
                                    const SamplingPolicy& policy, std::size_t n, Rng& rng,
                                    NetMode mode) {
  if (n == 0) fail_validation("draw_generator_samples: n must be >= 1");
  Tensor z({n, net.latent_dim()});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
  TrackedBatch s = generator_forward(tape, net, bound, z, rng, mode);
  Var log_q = mixture_log_density(s.values, s.log_density, policy.replace_prob);
  return {s.values, log_q};
}

}  // namespace led
