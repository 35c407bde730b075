// led: train and evaluate a likelihood-estimating adversarial model on 2D
// mixture benchmarks, export density grids, and run the verification oracles.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "led/metrics.hpp"
#include "led/training.hpp"
#include "led/verify.hpp"

namespace {

using namespace led;

std::string slurp_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path);
  os << content;
  if (!content.empty() && content.back() != '\n') os << '\n';
}

struct CommonOverrides {
  std::string config_path;
  std::int64_t seed = -1;
  std::int64_t epochs = -1;
  std::int64_t n_gen = -1;
  double entropy_weight = -1.0;
  double replace_prob = -1.0;
  unsigned threads = 0;

  // Flags take precedence over file values, which take precedence over
  // defaults.
  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = TrainConfig::from_json(slurp_file(config_path));
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (epochs >= 0) cfg.epochs = static_cast<std::size_t>(epochs);
    if (n_gen >= 0) cfg.n_gen = static_cast<std::size_t>(n_gen);
    if (entropy_weight >= 0.0) cfg.entropy_weight = entropy_weight;
    if (replace_prob >= 0.0) cfg.policy.replace_prob = replace_prob;
    if (threads > 0) cfg.threads = threads;
    if (cfg.threads > 0) set_max_threads(cfg.threads);
    return cfg;
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file");
    app->add_option("--seed", seed, "root seed (named substreams derive from it)");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--n-gen", n_gen, "generated samples per objective evaluation");
    app->add_option("--k", entropy_weight, "entropy weight in the generator objective");
    app->add_option("--replace-prob", replace_prob, "Gaussian replacement probability");
    app->add_option("--threads", threads, "worker cap for parallel loops");
  }
};

GridBounds parse_bounds(const std::string& text) {
  GridBounds b;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf", &b.x0, &b.x1, &b.y0, &b.y1) != 4) {
    fail_validation("--bounds expects x0,x1,y0,y1");
  }
  if (!(b.x1 > b.x0 && b.y1 > b.y0)) fail_validation("--bounds must be non-degenerate");
  return b;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  if (out.empty()) fail_validation("expected a comma-separated list of counts");
  return out;
}

struct LoadedCheckpoint {
  Checkpoint ckpt;
  TrainConfig cfg;
};

LoadedCheckpoint load_with_config(const std::string& ckpt_dir,
                                  const std::string& config_override) {
  LoadedCheckpoint out;
  out.ckpt = load_checkpoint(ckpt_dir);
  if (!config_override.empty()) {
    out.cfg = TrainConfig::from_json(slurp_file(config_override));
  } else if (!out.ckpt.train_config_json.empty()) {
    out.cfg = TrainConfig::from_json(out.ckpt.train_config_json);
  } else {
    fail_validation("checkpoint carries no config snapshot; pass --config");
  }
  return out;
}

int cmd_train(const CommonOverrides& common, const std::string& out_dir) {
  TrainConfig cfg = common.resolve();
  if (out_dir.empty()) fail_validation("train: --out is required");
  const GmmSpec spec = make_gmm(cfg.data);
  std::cerr << "train: data=" << cfg.data.kind << " epochs=" << cfg.epochs
            << " width=" << cfg.gen_arch.width << " blocks=" << cfg.gen_arch.blocks
            << " seed=" << cfg.seed << "\n";
  TrainResult result = train(cfg, spec, out_dir);
  std::cerr << "train: finished in " << result.record.wall_ms_total / 1000.0 << " s; modes="
            << result.record.final_eval.hq.modes_captured
            << " hq=" << result.record.final_eval.hq.hq_percent << "%\n";
  std::cerr << "train: record written to " << out_dir << "/record.json\n";
  return 0;
}

int cmd_eval(const CommonOverrides& common, const std::string& ckpt_dir,
             const std::string& out_path) {
  if (ckpt_dir.empty()) fail_validation("eval: --ckpt is required");
  LoadedCheckpoint loaded = load_with_config(ckpt_dir, common.config_path);
  if (common.threads > 0) set_max_threads(common.threads);
  const GmmSpec spec = make_gmm(loaded.cfg.data);
  const std::uint64_t seed =
      common.seed >= 0 ? static_cast<std::uint64_t>(common.seed) : loaded.cfg.seed;
  Rng rng = Rng(seed).fork("cli-eval");
  EvalReport report = evaluate_model(loaded.ckpt.critic, loaded.ckpt.gen, loaded.cfg.policy,
                                     spec, loaded.cfg.eval, rng);
  nlohmann::json j = nlohmann::json::parse(report.to_json());
  j["options"] = {{"ckpt", ckpt_dir}, {"seed", seed}};
  const std::string text = j.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    write_file(out_path, text);
    std::cerr << "eval: report written to " << out_path << "\n";
  }
  return 0;
}

int cmd_sample(const CommonOverrides& common, const std::string& ckpt_dir, std::size_t count,
               const std::string& out_path) {
  if (ckpt_dir.empty()) fail_validation("sample: --ckpt is required");
  if (count == 0) fail_validation("sample: --n must be >= 1");
  LoadedCheckpoint loaded = load_with_config(ckpt_dir, common.config_path);
  SamplingPolicy policy = loaded.cfg.policy;
  if (common.replace_prob >= 0.0) policy.replace_prob = common.replace_prob;
  const std::uint64_t seed =
      common.seed >= 0 ? static_cast<std::uint64_t>(common.seed) : loaded.cfg.seed;
  Rng rng = Rng(seed).fork("cli-sample");
  MixtureSamples samples =
      draw_mixture_samples(loaded.ckpt.gen, policy, count, rng, NetMode::kEval);

  std::ostringstream os;
  os << "x,y,log_density\n";
  os.precision(17);
  for (std::size_t i = 0; i < count; ++i) {
    os << samples.values.at(i, 0) << ',' << samples.values.at(i, 1) << ','
       << samples.log_q[i] << '\n';
  }
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    write_file(out_path, os.str());
    std::cerr << "sample: " << count << " points written to " << out_path << "\n";
  }
  return 0;
}

int cmd_density_grid(const CommonOverrides& common, const std::string& ckpt_dir,
                     const std::string& which, std::size_t resolution,
                     const std::string& bounds_text, const std::string& out_prefix) {
  if (out_prefix.empty()) fail_validation("density-grid: --out is required");
  if (resolution < 2) fail_validation("density-grid: --res must be >= 2");

  DensityFn fn;
  BatchDensityFn batch_fn;
  GridBounds bounds{-2, 2, -2, 2};
  bool bounds_set = false;
  if (!bounds_text.empty()) {
    bounds = parse_bounds(bounds_text);
    bounds_set = true;
  }

  LoadedCheckpoint loaded;
  std::optional<GeneratorEvaluator> evaluator;
  std::optional<AlphaEstimate> alpha;
  if (which == "data") {
    TrainConfig cfg = common.resolve();
    const GmmSpec spec = make_gmm(cfg.data);
    if (!bounds_set) bounds = default_bounds(spec);
    batch_fn = gmm_batch_density_fn(spec);
  } else if (which == "critic" || which == "generator") {
    if (ckpt_dir.empty()) fail_validation("density-grid: --ckpt is required for " + which);
    loaded = load_with_config(ckpt_dir, common.config_path);
    if (common.threads > 0) set_max_threads(common.threads);
    const GmmSpec spec = make_gmm(loaded.cfg.data);
    if (!bounds_set) bounds = default_bounds(spec);
    const std::uint64_t seed =
        common.seed >= 0 ? static_cast<std::uint64_t>(common.seed) : loaded.cfg.seed;
    if (which == "critic") {
      Rng rng = Rng(seed).fork("cli-grid-alpha");
      alpha = estimate_alpha(loaded.ckpt.critic, loaded.ckpt.gen, loaded.cfg.policy,
                             loaded.cfg.eval.alpha_samples, rng);
      std::cerr << "density-grid: alpha = " << alpha->mean << " (std " << alpha->stddev
                << ", n " << alpha->n_samples << ")\n";
      batch_fn = critic_batch_density_fn(loaded.ckpt.critic, alpha->log_mean);
    } else {
      evaluator.emplace(loaded.ckpt.gen);
      fn = generator_mixture_density_fn(*evaluator, loaded.cfg.policy, seed);
    }
  } else {
    fail_validation("density-grid: --which must be data, critic or generator");
  }

  DensityGrid grid = batch_fn ? density_grid(batch_fn, bounds, resolution)
                              : density_grid(fn, bounds, resolution);
  export_density_grid_csv(grid, out_prefix + ".csv", out_prefix + ".json");
  std::cerr << "density-grid: integral = " << grid.integral << "; wrote " << out_prefix
            << ".csv and .json\n";
  return 0;
}

int cmd_alpha_study(const CommonOverrides& common, const std::string& ckpt_dir,
                    const std::string& counts_text, std::size_t repeats,
                    const std::string& out_path) {
  if (ckpt_dir.empty()) fail_validation("alpha-study: --ckpt is required");
  LoadedCheckpoint loaded = load_with_config(ckpt_dir, common.config_path);
  const std::vector<std::size_t> counts = parse_size_list(counts_text);
  const std::uint64_t seed =
      common.seed >= 0 ? static_cast<std::uint64_t>(common.seed) : loaded.cfg.seed;
  Rng rng = Rng(seed).fork("cli-alpha-study");
  const CriticNet& critic = loaded.ckpt.critic;
  auto table = alpha_convergence_study(
      [&critic](const Tensor& values) { return critic_log_density_batch(critic, values); },
      loaded.ckpt.gen, loaded.cfg.policy, counts, repeats, rng);

  nlohmann::json j;
  j["options"] = {{"ckpt", ckpt_dir}, {"repeats", repeats}, {"seed", seed}};
  j["rows"] = nlohmann::json::array();
  for (const auto& row : table) {
    j["rows"].push_back(
        {{"n_samples", row.n_samples}, {"mean", row.mean}, {"std", row.stddev}});
    std::cerr << "alpha-study: n=" << row.n_samples << " mean=" << row.mean
              << " std=" << row.stddev << "\n";
  }
  const std::string text = j.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    write_file(out_path, text);
  }
  return 0;
}

int cmd_sweep(const CommonOverrides& common, const std::string& widths_text,
              const std::string& blocks_text, const std::string& out_path) {
  TrainConfig cfg = common.resolve();
  const auto widths = parse_size_list(widths_text);
  const auto blocks = parse_size_list(blocks_text);
  const GmmSpec spec = make_gmm(cfg.data);
  std::cerr << "sweep: " << widths.size() * blocks.size() << " cells on " << cfg.data.kind
            << "\n";
  auto cells = expressiveness_sweep(cfg, widths, blocks, spec);

  nlohmann::json j;
  j["options"] = nlohmann::json::parse(cfg.to_json());
  j["cells"] = nlohmann::json::array();
  for (const auto& cell : cells) {
    j["cells"].push_back({{"width", cell.width},
                          {"blocks", cell.blocks},
                          {"modes_captured", cell.modes_captured},
                          {"hq_percent", cell.hq_percent}});
    std::cerr << "sweep: width=" << cell.width << " blocks=" << cell.blocks
              << " modes=" << cell.modes_captured << " hq=" << cell.hq_percent << "%\n";
  }
  const std::string text = j.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    write_file(out_path, text);
    std::cerr << "sweep: table written to " << out_path << "\n";
  }
  return 0;
}

int cmd_verify(const CommonOverrides& common, const std::string& suite,
               const std::string& out_path) {
  const std::uint64_t seed = common.seed >= 0 ? static_cast<std::uint64_t>(common.seed) : 1;
  if (common.threads > 0) set_max_threads(common.threads);
  std::vector<std::string> suites;
  if (suite == "all") {
    suites = verify_suite_names();
  } else {
    suites = {suite};
  }
  nlohmann::json j;
  j["options"] = {{"suite", suite}, {"seed", seed}};
  j["suites"] = nlohmann::json::array();
  bool all_pass = true;
  for (const auto& name : suites) {
    VerifyReport report = run_verify_suite(name, seed);
    nlohmann::json sj;
    sj["suite"] = report.suite;
    sj["checks"] = nlohmann::json::array();
    for (const auto& check : report.checks) {
      sj["checks"].push_back({{"name", check.name},
                              {"max_error", check.max_error},
                              {"tolerance", check.tolerance},
                              {"pass", check.pass}});
      std::cerr << "verify[" << report.suite << "] " << check.name
                << ": max_error=" << check.max_error << " tol=" << check.tolerance << " "
                << (check.pass ? "PASS" : "FAIL") << "\n";
    }
    sj["all_pass"] = report.all_pass;
    j["suites"].push_back(sj);
    all_pass = all_pass && report.all_pass;
  }
  const std::string text = j.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    write_file(out_path, text);
  }
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"led: adversarial density estimation on 2D mixture benchmarks"};
  app.require_subcommand(1);

  CommonOverrides common;
  std::string out_path, ckpt_dir, which = "critic", bounds_text;
  std::string counts_text = "16,64,256,1024", widths_text = "64,128,256",
              blocks_text = "2,4,8", suite = "all";
  std::size_t sample_count = 2500, resolution = 200, repeats = 20;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write a run record");
  common.attach(train_cmd);
  train_cmd->add_option("--out", out_path, "output directory")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  common.attach(eval_cmd);
  eval_cmd->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  eval_cmd->add_option("--out", out_path, "report JSON path (default: stdout)");

  CLI::App* sample_cmd = app.add_subcommand("sample", "draw tracked samples to CSV");
  common.attach(sample_cmd);
  sample_cmd->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  sample_cmd->add_option("--n", sample_count, "number of samples");
  sample_cmd->add_option("--out", out_path, "CSV path (default: stdout)");

  CLI::App* grid_cmd = app.add_subcommand("density-grid", "export a log-density grid");
  common.attach(grid_cmd);
  grid_cmd->add_option("--ckpt", ckpt_dir, "checkpoint directory");
  grid_cmd->add_option("--which", which, "data | critic | generator");
  grid_cmd->add_option("--res", resolution, "nodes per axis");
  grid_cmd->add_option("--bounds", bounds_text, "x0,x1,y0,y1");
  grid_cmd->add_option("--out", out_path, "output prefix (.csv/.json appended)")->required();

  CLI::App* alpha_cmd = app.add_subcommand("alpha-study",
                                           "normalization constant vs sample count");
  common.attach(alpha_cmd);
  alpha_cmd->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  alpha_cmd->add_option("--counts", counts_text, "comma-separated sample counts");
  alpha_cmd->add_option("--repeats", repeats, "independent repeats per count");
  alpha_cmd->add_option("--out", out_path, "JSON path (default: stdout)");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "expressiveness sweep over width/blocks");
  common.attach(sweep_cmd);
  sweep_cmd->add_option("--widths", widths_text, "comma-separated feature widths");
  sweep_cmd->add_option("--blocks", blocks_text, "comma-separated block counts");
  sweep_cmd->add_option("--out", out_path, "JSON path (default: stdout)");

  CLI::App* verify_cmd = app.add_subcommand("verify", "run the oracle suites");
  common.attach(verify_cmd);
  verify_cmd->add_option("--suite", suite,
                         "logdet | conv | gradcheck | changevar | normalization | all");
  verify_cmd->add_option("--out", out_path, "JSON path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(common, out_path);
    if (eval_cmd->parsed()) return cmd_eval(common, ckpt_dir, out_path);
    if (sample_cmd->parsed()) return cmd_sample(common, ckpt_dir, sample_count, out_path);
    if (grid_cmd->parsed()) {
      return cmd_density_grid(common, ckpt_dir, which, resolution, bounds_text, out_path);
    }
    if (alpha_cmd->parsed()) {
      return cmd_alpha_study(common, ckpt_dir, counts_text, repeats, out_path);
    }
    if (sweep_cmd->parsed()) return cmd_sweep(common, widths_text, blocks_text, out_path);
    if (verify_cmd->parsed()) return cmd_verify(common, suite, out_path);
  } catch (const ValidationError& e) {
    std::cerr << "error (validation): " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
