#include "led/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace led {

GeneratorNet make_toy_generator(const GenArchConfig& cfg) {
  if (cfg.latent_dim == 0 || cfg.output_dim == 0) {
    fail_validation("make_toy_generator: dimensions must be positive");
  }
  if (cfg.width < cfg.latent_dim) {
    fail_validation("make_toy_generator: width must be >= latent dim");
  }
  std::vector<LayerSpec> layers;
  std::size_t cur = cfg.latent_dim;
  while (cur < cfg.width) {
    const std::size_t n_add = std::min(cur, cfg.width - cur);
    layers.push_back(InflateLayer{n_add, cfg.inflate_sigma});
    cur += n_add;
    layers.push_back(LinearLayer{cur});
    layers.push_back(ActivationLayer{cfg.activation});
  }
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    layers.push_back(LinearLayer{cur});
    if (cfg.batchnorm) layers.push_back(BatchNormLayer{cur});
    layers.push_back(ActivationLayer{cfg.activation});
  }
  // Final affine map before the reduction keeps the output unconstrained by
  // the activation's codomain.
  layers.push_back(LinearLayer{cur});
  if (cur > cfg.output_dim) {
    layers.push_back(ReduceLayer{cfg.output_dim, cfg.reduce_sigma});
  }
  return GeneratorNet(cfg.latent_dim, std::move(layers));
}

CriticNet make_toy_critic(const CriticArchConfig& cfg) {
  if (cfg.depth == 0) fail_validation("make_toy_critic: depth must be >= 1");
  std::vector<CriticLayerSpec> layers;
  std::size_t cur = cfg.input_dim;
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    layers.push_back(CriticLinear{cur, cfg.hidden});
    layers.push_back(CriticActivation{cfg.activation});
    cur = cfg.hidden;
  }
  layers.push_back(CriticLinear{cur, 1});
  CriticNet net(cfg.input_dim, std::move(layers));
  net.penalty_enabled = cfg.penalty;
  net.literal_penalty = cfg.literal_penalty;
  net.output_scale = cfg.output_scale;
  return net;
}

GmmSpec make_gmm(const DataConfig& cfg) {
  if (cfg.kind == "ring") {
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : 0.01;
    return ring_spec(cfg.ring_modes, cfg.ring_radius, sigma);
  }
  if (cfg.kind == "grid") {
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : 0.05;
    return grid_spec(cfg.grid_side, cfg.grid_spacing, sigma);
  }
  fail_validation("DataConfig: unknown kind '" + cfg.kind + "'");
}

// ---- config serialization ----

namespace {

nlohmann::json activation_json(const SmoothReluParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"u0", p.u0}, {"t0", p.t0}};
}

SmoothReluParams activation_from_json(const nlohmann::json& j) {
  SmoothReluParams p;
  p.alpha = j.value("alpha", 5.8);
  p.beta = j.value("beta", 1.0);
  p.u0 = j.value("u0", 0.0);
  p.t0 = j.value("t0", 0.0);
  return p;
}

}  // namespace

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["batches_per_epoch"] = batches_per_epoch;
  j["batch_size"] = batch_size;
  j["n_gen"] = n_gen;
  j["entropy_weight"] = entropy_weight;
  j["lr_disc"] = lr_disc;
  j["lr_gen"] = lr_gen;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["disc_steps"] = disc_steps;
  j["gen_steps"] = gen_steps;
  j["eval_every"] = eval_every;
  j["policy"] = {{"replace_prob", policy.replace_prob},
                 {"marginal_samples", policy.marginal_samples}};
  j["eval"] = {{"sample_points", eval.sample_points},
               {"alpha_samples", eval.alpha_samples},
               {"bpd_points", eval.bpd_points},
               {"kl_resolution", eval.kl_resolution}};
  j["generator"] = {{"latent_dim", gen_arch.latent_dim},
                    {"width", gen_arch.width},
                    {"blocks", gen_arch.blocks},
                    {"output_dim", gen_arch.output_dim},
                    {"batchnorm", gen_arch.batchnorm},
                    {"inflate_sigma", gen_arch.inflate_sigma},
                    {"reduce_sigma", gen_arch.reduce_sigma},
                    {"activation", activation_json(gen_arch.activation)}};
  j["critic"] = {{"input_dim", critic_arch.input_dim},
                 {"hidden", critic_arch.hidden},
                 {"depth", critic_arch.depth},
                 {"penalty", critic_arch.penalty},
                 {"literal_penalty", critic_arch.literal_penalty},
                 {"output_scale", critic_arch.output_scale},
                 {"activation", activation_json(critic_arch.activation)}};
  j["data"] = {{"kind", data.kind},
               {"ring_modes", data.ring_modes},
               {"ring_radius", data.ring_radius},
               {"grid_side", data.grid_side},
               {"grid_spacing", data.grid_spacing},
               {"sigma", data.sigma}};
  j["threads"] = threads;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  TrainConfig c;
  c.seed = j.value("seed", std::uint64_t{1});
  c.epochs = j.value("epochs", std::size_t{100});
  c.batches_per_epoch = j.value("batches_per_epoch", std::size_t{100});
  c.batch_size = j.value("batch_size", std::size_t{128});
  c.n_gen = j.value("n_gen", std::size_t{64});
  c.entropy_weight = j.value("entropy_weight", 0.1);
  c.lr_disc = j.value("lr_disc", 1e-3);
  c.lr_gen = j.value("lr_gen", 1e-3);
  c.adam_beta1 = j.value("adam_beta1", 0.5);
  c.adam_beta2 = j.value("adam_beta2", 0.999);
  c.disc_steps = j.value("disc_steps", std::size_t{1});
  c.gen_steps = j.value("gen_steps", std::size_t{1});
  c.eval_every = j.value("eval_every", std::size_t{10});
  if (j.contains("policy")) {
    c.policy.replace_prob = j["policy"].value("replace_prob", 0.05);
    c.policy.marginal_samples = j["policy"].value("marginal_samples", std::size_t{32});
  }
  if (j.contains("eval")) {
    c.eval.sample_points = j["eval"].value("sample_points", std::size_t{2500});
    c.eval.alpha_samples = j["eval"].value("alpha_samples", std::size_t{256});
    c.eval.bpd_points = j["eval"].value("bpd_points", std::size_t{2048});
    c.eval.kl_resolution = j["eval"].value("kl_resolution", std::size_t{129});
  }
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    c.gen_arch.latent_dim = g.value("latent_dim", std::size_t{2});
    c.gen_arch.width = g.value("width", std::size_t{64});
    c.gen_arch.blocks = g.value("blocks", std::size_t{4});
    c.gen_arch.output_dim = g.value("output_dim", std::size_t{2});
    c.gen_arch.batchnorm = g.value("batchnorm", true);
    c.gen_arch.inflate_sigma = g.value("inflate_sigma", 1.0);
    c.gen_arch.reduce_sigma = g.value("reduce_sigma", 0.2);
    if (g.contains("activation")) c.gen_arch.activation = activation_from_json(g["activation"]);
  }
  if (j.contains("critic")) {
    const auto& cr = j["critic"];
    c.critic_arch.input_dim = cr.value("input_dim", std::size_t{2});
    c.critic_arch.hidden = cr.value("hidden", std::size_t{64});
    c.critic_arch.depth = cr.value("depth", std::size_t{3});
    c.critic_arch.penalty = cr.value("penalty", true);
    c.critic_arch.literal_penalty = cr.value("literal_penalty", false);
    c.critic_arch.output_scale = cr.value("output_scale", 1.0);
    if (cr.contains("activation")) {
      c.critic_arch.activation = activation_from_json(cr["activation"]);
    }
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.data.kind = d.value("kind", std::string("ring"));
    c.data.ring_modes = d.value("ring_modes", std::size_t{8});
    c.data.ring_radius = d.value("ring_radius", 1.0);
    c.data.grid_side = d.value("grid_side", std::size_t{5});
    c.data.grid_spacing = d.value("grid_spacing", 1.0);
    c.data.sigma = d.value("sigma", 0.0);
  }
  c.threads = j.value("threads", 0u);
  return c;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(to_json()); }

// ---- checkpointing ----

void save_checkpoint(const std::string& dir, const GeneratorNet& gen, const CriticNet& critic,
                     std::uint64_t config_hash, std::size_t epoch,
                     const std::string& rng_data_state, const std::string& rng_noise_state,
                     const std::string& train_config_json) {
  std::filesystem::create_directories(dir);
  if (!train_config_json.empty()) {
    std::ofstream os(dir + "/train_config.json", std::ios::trunc);
    os << train_config_json << '\n';
  }
  gen.params().save(dir + "/gen.params");
  critic.params().save(dir + "/critic.params");
  {
    std::ofstream os(dir + "/gen_config.json", std::ios::trunc);
    os << gen.config_json() << '\n';
  }
  {
    std::ofstream os(dir + "/critic_config.json", std::ios::trunc);
    os << critic.config_json() << '\n';
  }
  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["config_hash"] = config_hash;
  meta["epoch"] = epoch;
  meta["rng_data_state"] = rng_data_state;
  meta["rng_noise_state"] = rng_noise_state;
  std::ofstream os(dir + "/meta.json", std::ios::trunc);
  if (!os) throw IoError("save_checkpoint: cannot write " + dir + "/meta.json");
  os << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& dir) {
  auto slurp = [](const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("load_checkpoint: cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  };
  Checkpoint ckpt;
  ckpt.gen = GeneratorNet::from_config_json(slurp(dir + "/gen_config.json"));
  ckpt.gen.params() = ParamStore::load(dir + "/gen.params");
  ckpt.critic = CriticNet::from_config_json(slurp(dir + "/critic_config.json"));
  ckpt.critic.params() = ParamStore::load(dir + "/critic.params");
  nlohmann::json meta = nlohmann::json::parse(slurp(dir + "/meta.json"));
  ckpt.config_hash = meta.value("config_hash", std::uint64_t{0});
  ckpt.epoch = meta.value("epoch", std::size_t{0});
  ckpt.rng_data_state = meta.value("rng_data_state", std::string());
  ckpt.rng_noise_state = meta.value("rng_noise_state", std::string());
  if (std::filesystem::exists(dir + "/train_config.json")) {
    ckpt.train_config_json = slurp(dir + "/train_config.json");
  }
  return ckpt;
}

// ---- run record ----

namespace {

nlohmann::json eval_to_json(const EvalReport& e) {
  return nlohmann::json::parse(e.to_json());
}

}  // namespace

std::string RunRecord::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["best_epoch"] = best_epoch;
  j["best_grid_kl"] = best_kl;
  j["wall_ms_total"] = wall_ms_total;
  j["final_eval"] = eval_to_json(final_eval);
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json ej;
    ej["epoch"] = e.epoch;
    ej["l_real"] = e.l_real;
    ej["l_fake"] = e.l_fake;
    ej["disc_total"] = e.disc_total;
    ej["gen_objective"] = e.gen_objective;
    ej["wall_ms"] = e.wall_ms;
    if (e.has_eval) ej["eval"] = eval_to_json(e.eval);
    j["epochs"].push_back(ej);
  }
  return j.dump(2);
}

// ---- the loop ----

TrainResult train(const TrainConfig& cfg, const GmmSpec& spec, const std::string& out_dir) {
  if (cfg.epochs > 0 &&
      (cfg.batches_per_epoch == 0 || cfg.batch_size == 0 || cfg.n_gen == 0)) {
    fail_validation("train: counts must be >= 1");
  }
  if (!(cfg.lr_disc > 0.0 && cfg.lr_gen > 0.0)) {
    fail_validation("train: learning rates must be positive");
  }
  if (cfg.threads != 0) set_max_threads(cfg.threads);

  Rng root(cfg.seed);
  Rng init_rng = root.fork("init");
  Rng data_rng = root.fork("data");
  Rng noise_rng = root.fork("noise");
  Rng eval_rng = root.fork("eval");

  TrainResult result;
  result.gen = make_toy_generator(cfg.gen_arch);
  result.gen.init_params(init_rng);
  result.critic = make_toy_critic(cfg.critic_arch);
  result.critic.init_params(init_rng);

  RunRecord& record = result.record;
  record.seed = cfg.seed;
  record.config_hash = cfg.hash();
  record.best_kl = std::numeric_limits<double>::infinity();

  const AdamConfig disc_adam{cfg.lr_disc, cfg.adam_beta1, cfg.adam_beta2, 1e-8};
  const AdamConfig gen_adam{cfg.lr_gen, cfg.adam_beta1, cfg.adam_beta2, 1e-8};

  const auto t_start = std::chrono::steady_clock::now();
  double best_kl = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    double sum_real = 0.0, sum_fake = 0.0, sum_total = 0.0, sum_gen = 0.0;
    std::size_t disc_count = 0, gen_count = 0;

    for (std::size_t batch = 0; batch < cfg.batches_per_epoch; ++batch) {
      for (std::size_t s = 0; s < cfg.disc_steps; ++s) {
        Tensor real = sample_gmm(spec, cfg.batch_size, data_rng);
        try {
          Tape tape;
          tape.set_check_values(true);
          BoundParams critic_bound = bind_params(tape, result.critic.params(), true);
          DiscriminatorLossGraph loss =
              build_discriminator_loss(tape, result.critic, critic_bound, result.gen,
                                       cfg.policy, real, cfg.n_gen, noise_rng,
                                       NetMode::kTrainStatic);
          tape.backward(scale(loss.total, -1.0));
          adam_step(result.critic.params(),
                    trainable_grads(critic_bound, result.critic.params()), disc_adam);
          sum_real += loss.values.l_real;
          sum_fake += loss.values.l_fake;
          sum_total += loss.values.total;
          ++disc_count;
        } catch (const NumericalError& e) {
          fail_numeric("train: discriminator step aborted at epoch " + std::to_string(epoch) +
                       ", batch " + std::to_string(batch) + ": " + e.what());
        }
      }
      for (std::size_t s = 0; s < cfg.gen_steps; ++s) {
        try {
          Tape tape;
          tape.set_check_values(true);
          BoundParams gen_bound = bind_params(tape, result.gen.params(), true);
          GeneratorLossGraph loss =
              build_generator_loss(tape, result.critic, result.gen, gen_bound, cfg.policy,
                                   cfg.n_gen, cfg.entropy_weight, noise_rng, NetMode::kTrain);
          tape.backward(scale(loss.total, -1.0));
          adam_step(result.gen.params(), trainable_grads(gen_bound, result.gen.params()),
                    gen_adam);
          sum_gen += loss.total->value[0];
          ++gen_count;
        } catch (const NumericalError& e) {
          fail_numeric("train: generator step aborted at epoch " + std::to_string(epoch) +
                       ", batch " + std::to_string(batch) + ": " + e.what());
        }
      }
    }

    EpochRecord er;
    er.epoch = epoch;
    er.l_real = disc_count ? sum_real / disc_count : 0.0;
    er.l_fake = disc_count ? sum_fake / disc_count : 0.0;
    er.disc_total = disc_count ? sum_total / disc_count : 0.0;
    er.gen_objective = gen_count ? sum_gen / gen_count : 0.0;

    const bool eval_now =
        cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs);
    if (eval_now) {
      Rng er_rng = eval_rng.fork("epoch", epoch);
      er.eval = evaluate_model(result.critic, result.gen, cfg.policy, spec, cfg.eval, er_rng);
      er.has_eval = true;
      if (er.eval.kl_data_model < best_kl) {
        best_kl = er.eval.kl_data_model;
        record.best_epoch = epoch;
        record.best_kl = best_kl;
        if (!out_dir.empty()) {
          save_checkpoint(out_dir + "/best", result.gen, result.critic, record.config_hash,
                          epoch, data_rng.state_hex(), noise_rng.state_hex(), cfg.to_json());
        }
      }
    }
    er.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                           t_epoch)
                     .count();
    record.epochs.push_back(std::move(er));
  }

  {
    Rng final_rng = eval_rng.fork("final");
    record.final_eval =
        evaluate_model(result.critic, result.gen, cfg.policy, spec, cfg.eval, final_rng);
    if (record.epochs.empty() || !std::isfinite(record.best_kl)) {
      record.best_epoch = cfg.epochs ? cfg.epochs - 1 : 0;
      record.best_kl = record.final_eval.kl_data_model;
    }
  }
  record.wall_ms_total =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (!out_dir.empty()) {
    save_checkpoint(out_dir + "/final", result.gen, result.critic, record.config_hash,
                    cfg.epochs, data_rng.state_hex(), noise_rng.state_hex(), cfg.to_json());
    std::ofstream os(out_dir + "/record.json", std::ios::trunc);
    if (!os) throw IoError("train: cannot write record under " + out_dir);
    os << record.to_json() << '\n';
    std::ofstream cs(out_dir + "/config_snapshot.json", std::ios::trunc);
    cs << cfg.to_json() << '\n';
  }
  return result;
}

std::vector<SweepCell> expressiveness_sweep(const TrainConfig& base,
                                            const std::vector<std::size_t>& widths,
                                            const std::vector<std::size_t>& blocks,
                                            const GmmSpec& spec) {
  if (widths.empty() || blocks.empty()) {
    fail_validation("expressiveness_sweep: width and block lists must be non-empty");
  }
  std::vector<SweepCell> cells;
  for (std::size_t w : widths) {
    for (std::size_t b : blocks) {
      TrainConfig cfg = base;
      cfg.gen_arch.width = w;
      cfg.gen_arch.blocks = b;
      TrainResult res = train(cfg, spec, "");
      cells.push_back(
          {w, b, res.record.final_eval.hq.modes_captured, res.record.final_eval.hq.hq_percent});
    }
  }
  return cells;
}

}  // namespace led
