#pragma once

#include <cstdint>
#include <vector>

#include "led/flow.hpp"

namespace led {

// Gaussian-replacement sampling: with probability replace_prob a generated
// point is swapped for a standard-normal draw in output space, so the
// sampling distribution has full support. The density attached to a sample is
// always that of the full procedure, the mixture
//   (1-p) * P_G(y) + p * N(y; 0, I).
struct SamplingPolicy {
  double replace_prob = 0.05;
  // Monte Carlo size for pointwise density queries at replacement draws.
  std::size_t marginal_samples = 32;
};

struct MixtureSamples {
  Tensor values;  // (n, d)
  Tensor log_q;   // (n) mixture log density
  std::vector<std::uint8_t> replaced;
};

// Critic-side sampling (no gradients). Generated points carry the tracked
// forward density inside the mixture; replacement points evaluate the
// generator density through GeneratorEvaluator.
MixtureSamples draw_mixture_samples(GeneratorNet& net, const SamplingPolicy& policy,
                                    std::size_t n, Rng& rng, NetMode mode);

// Single tracked sample under the policy.
TrackedSample sample(const SamplingPolicy& policy, GeneratorNet& net, Rng& rng);

// Generator-side sampling for the generator objective: generator-branch draws
// only (replacement draws carry no generator gradient), with the mixture
// density formula applied at the policy's replace_prob. z and the inflation
// noise are exogenous, so gradients flow through the values and the tracked
// density (reparameterization).
TrackedBatch draw_generator_samples(Tape& tape, GeneratorNet& net, const BoundParams& bound,
                                    const SamplingPolicy& policy, std::size_t n, Rng& rng,
                                    NetMode mode);

// log[(1-p) exp(log_gen) + p exp(log_normal)], elementwise over the batch.
Var mixture_log_density(const Var& values, const Var& gen_log_density, double replace_prob);
double mixture_log_density_value(double log_gen, double log_normal, double replace_prob);

}  // namespace led
