#include "led/objectives.hpp"

namespace led {

DiscriminatorLossGraph build_discriminator_loss(Tape& tape, const CriticNet& critic,
                                                const BoundParams& critic_bound,
                                                GeneratorNet& gen,
                                                const SamplingPolicy& policy,
                                                const Tensor& real_batch, std::size_t n_gen,
                                                Rng& rng, NetMode gen_mode) {
  if (real_batch.ndim() != 2 || real_batch.rows() == 0) {
    fail_validation("discriminator_loss: real batch must be non-empty (B,d)");
  }
  if (n_gen == 0) fail_validation("discriminator_loss: n_gen must be >= 1");

  Var real_logn = critic_log_density(critic, critic_bound, tape.constant(real_batch));
  Var l_real = mean_all(real_logn);

  MixtureSamples fake = draw_mixture_samples(gen, policy, n_gen, rng, gen_mode);
  Var fake_logn = critic_log_density(critic, critic_bound, tape.constant(fake.values));
  Var log_weights = sub(fake_logn, tape.constant(fake.log_q));
  Var l_fake = scale(log_mean_exp_all(log_weights), -1.0);

  DiscriminatorLossGraph out;
  out.total = add(l_real, l_fake);
  out.l_real = l_real;
  out.l_fake = l_fake;
  out.values.l_real = l_real->value[0];
  out.values.l_fake = l_fake->value[0];
  out.values.total = out.total->value[0];
  out.values.real_terms = real_logn->value.flat();
  out.values.fake_log_weights = log_weights->value.flat();
  return out;
}

LossBreakdown discriminator_loss(const CriticNet& critic, GeneratorNet& gen,
                                 const SamplingPolicy& policy, const Tensor& real_batch,
                                 std::size_t n_gen, Rng& rng) {
  Tape tape;
  BoundParams bound = bind_params(tape, critic.params(), false);
  return build_discriminator_loss(tape, critic, bound, gen, policy, real_batch, n_gen, rng,
                                  NetMode::kEval)
      .values;
}

GeneratorLossGraph build_generator_loss(Tape& tape, const CriticNet& critic,
                                        GeneratorNet& gen, const BoundParams& gen_bound,
                                        const SamplingPolicy& policy, std::size_t n_gen,
                                        double entropy_weight, Rng& rng, NetMode gen_mode) {
  if (n_gen == 0) fail_validation("generator_loss: n_gen must be >= 1");
  TrackedBatch samples = draw_generator_samples(tape, gen, gen_bound, policy, n_gen, rng,
                                                gen_mode);
  // Critic parameters enter as constants: gradient isolation by construction.
  BoundParams critic_bound = bind_params(tape, critic.params(), false);
  Var critic_term = mean_all(critic_log_density(critic, critic_bound, samples.values));
  Var entropy = scale(mean_all(samples.log_density), -1.0);

  GeneratorLossGraph out;
  out.total = add(scale(entropy, entropy_weight), critic_term);
  out.entropy = entropy;
  out.critic_term = critic_term;
  out.samples = samples;
  return out;
}

double generator_loss(const CriticNet& critic, GeneratorNet& gen,
                      const SamplingPolicy& policy, std::size_t n_gen, double entropy_weight,
                      Rng& rng) {
  Tape tape;
  BoundParams bound = bind_params(tape, gen.params(), false);
  return build_generator_loss(tape, critic, gen, bound, policy, n_gen, entropy_weight, rng,
                              NetMode::kEval)
      .total->value[0];
}

}  // namespace led
