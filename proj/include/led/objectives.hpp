#pragma once

#include "led/critic.hpp"
#include "led/sampling.hpp"

namespace led {

// Both objectives are maximized. The discriminator objective is
//   L_real + L_fake
//     = mean_i log N_theta(x_i)
//       - log[(1/n) sum_j exp(log N_theta(y_j) - log Q(y_j))]
// with y_j policy samples and Q the sampling mixture; dividing by n instead
// of the bare sum shifts the loss by a constant with identical gradients and
// keeps values comparable across n. The generator objective is
//   k * H_hat + mean_j log N_theta(y_j),
// H_hat = -mean_j log Q(y_j), the Monte Carlo entropy of the tracked density.

struct LossBreakdown {
  double l_real = 0.0;
  double l_fake = 0.0;
  double total = 0.0;  // always l_real + l_fake
  std::vector<double> real_terms;        // per-sample log N_theta(x_i)
  std::vector<double> fake_log_weights;  // per-sample log N_theta(y_j) - log Q(y_j)
};

struct DiscriminatorLossGraph {
  Var total;
  Var l_real;
  Var l_fake;
  LossBreakdown values;
};

// Builds the discriminator objective on the tape. Generator parameters are
// never on the tape: fake samples and their densities enter as constants.
DiscriminatorLossGraph build_discriminator_loss(Tape& tape, const CriticNet& critic,
                                                const BoundParams& critic_bound,
                                                GeneratorNet& gen,
                                                const SamplingPolicy& policy,
                                                const Tensor& real_batch, std::size_t n_gen,
                                                Rng& rng, NetMode gen_mode);

// Value-only convenience.
LossBreakdown discriminator_loss(const CriticNet& critic, GeneratorNet& gen,
                                 const SamplingPolicy& policy, const Tensor& real_batch,
                                 std::size_t n_gen, Rng& rng);

struct GeneratorLossGraph {
  Var total;
  Var entropy;      // H_hat
  Var critic_term;  // mean_j log N_theta(y_j)
  TrackedBatch samples;
};

// Builds the generator objective; critic parameters are bound as constants so
// no gradient can reach them. Gradients flow through the sample values and
// through the tracked density (z and the noise are exogenous draws).
GeneratorLossGraph build_generator_loss(Tape& tape, const CriticNet& critic,
                                        GeneratorNet& gen, const BoundParams& gen_bound,
                                        const SamplingPolicy& policy, std::size_t n_gen,
                                        double entropy_weight, Rng& rng, NetMode gen_mode);

double generator_loss(const CriticNet& critic, GeneratorNet& gen,
                      const SamplingPolicy& policy, std::size_t n_gen, double entropy_weight,
                      Rng& rng);

}  // namespace led
