#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "led/metrics.hpp"
#include "led/objectives.hpp"

namespace led {

// ---- architecture builders ----
struct GenArchConfig {
  std::size_t latent_dim = 2;
  std::size_t width = 64;    // maximal feature count
  std::size_t blocks = 4;    // linear+batchnorm+activation blocks at full width
  std::size_t output_dim = 2;
  bool batchnorm = true;
  double inflate_sigma = 1.0;
  double reduce_sigma = 0.2;
  SmoothReluParams activation;
};

// Expansion doubles the feature count (noise concat + square linear) until
// the maximal width, then runs the blocks, then reduces back to the output
// dimension in one step so pointwise density queries stay cheap.
GeneratorNet make_toy_generator(const GenArchConfig& cfg);

struct CriticArchConfig {
  std::size_t input_dim = 2;
  std::size_t hidden = 64;
  std::size_t depth = 3;  // hidden linear+activation pairs
  bool penalty = true;
  bool literal_penalty = false;
  double output_scale = 1.0;
  SmoothReluParams activation;
};

CriticNet make_toy_critic(const CriticArchConfig& cfg);

struct DataConfig {
  std::string kind = "ring";  // "ring" | "grid"
  std::size_t ring_modes = 8;
  double ring_radius = 1.0;
  std::size_t grid_side = 5;
  double grid_spacing = 1.0;
  double sigma = 0.0;  // <= 0 picks the per-kind default (0.01 ring, 0.05 grid)
};

GmmSpec make_gmm(const DataConfig& cfg);

// ---- training ----
struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t epochs = 100;
  std::size_t batches_per_epoch = 100;
  std::size_t batch_size = 128;
  std::size_t n_gen = 64;          // generated samples per objective evaluation
  double entropy_weight = 0.1;     // k
  double lr_disc = 1e-3;
  double lr_gen = 1e-3;
  double adam_beta1 = 0.5;   // GAN-style momentum damping
  double adam_beta2 = 0.999;
  std::size_t disc_steps = 1;      // update ratio per batch
  std::size_t gen_steps = 1;
  std::size_t eval_every = 10;     // epochs; 0 = final evaluation only
  SamplingPolicy policy;
  EvalOptions eval;
  GenArchConfig gen_arch;
  CriticArchConfig critic_arch;
  DataConfig data;
  unsigned threads = 0;  // 0 = leave the global setting untouched

  std::string to_json() const;
  static TrainConfig from_json(const std::string& json_text);
  std::uint64_t hash() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double l_real = 0.0;
  double l_fake = 0.0;
  double disc_total = 0.0;
  double gen_objective = 0.0;
  double wall_ms = 0.0;
  bool has_eval = false;
  EvalReport eval;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // lowest grid KL among evaluated epochs
  double best_kl = 0.0;
  EvalReport final_eval;
  double wall_ms_total = 0.0;

  std::string to_json() const;
};

struct TrainResult {
  RunRecord record;
  GeneratorNet gen;
  CriticNet critic;
};

// Alternating optimization; fully deterministic given the config seed. Writes
// checkpoints under out_dir ("final/", plus "best/" at eval cadence) when
// out_dir is non-empty. Non-finite losses abort with the offending step named.
TrainResult train(const TrainConfig& cfg, const GmmSpec& spec, const std::string& out_dir);

// ---- checkpointing ----
struct Checkpoint {
  GeneratorNet gen;
  CriticNet critic;
  std::uint64_t config_hash = 0;
  std::size_t epoch = 0;
  std::string rng_data_state;
  std::string rng_noise_state;
  std::string train_config_json;  // full snapshot; commands replay from it
};

void save_checkpoint(const std::string& dir, const GeneratorNet& gen, const CriticNet& critic,
                     std::uint64_t config_hash, std::size_t epoch,
                     const std::string& rng_data_state, const std::string& rng_noise_state,
                     const std::string& train_config_json);
Checkpoint load_checkpoint(const std::string& dir);

// ---- expressiveness sweep ----
struct SweepCell {
  std::size_t width = 0;
  std::size_t blocks = 0;
  std::size_t modes_captured = 0;
  double hq_percent = 0.0;
};

// Trains one model per (width, blocks) pair from the template config.
std::vector<SweepCell> expressiveness_sweep(const TrainConfig& base,
                                            const std::vector<std::size_t>& widths,
                                            const std::vector<std::size_t>& blocks,
                                            const GmmSpec& spec);

}  // namespace led
