// Acceptance suite: runs every acceptance criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code 0 iff all pass.
//
// Trained models are shared where a criterion calls for "the trained ring
// model".

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <vector>

#include "led/verify.hpp"

using namespace led;

namespace {

struct CriterionResult {
  int id;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CriterionResult> g_results;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back({id, name, pass, detail});
  std::cout << "AC" << id << " [" << (pass ? "PASS" : "FAIL") << "] " << name << ": " << detail
            << std::endl;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Reference configurations. The data geometry follows the benchmark defaults
// (ring: 8 modes, radius 1, sigma 0.01; grid: 5x5, spacing 1, sigma 0.05).
TrainConfig ring_reference_config() {
  TrainConfig cfg;
  cfg.data.kind = "ring";
  cfg.epochs = 100;
  cfg.batches_per_epoch = 100;
  cfg.batch_size = 128;
  cfg.n_gen = 192;
  cfg.entropy_weight = 0.1;
  cfg.gen_steps = 2;
  cfg.policy.replace_prob = 0.3;
  cfg.policy.marginal_samples = 16;
  cfg.gen_arch.width = 64;
  cfg.gen_arch.blocks = 4;
  cfg.gen_arch.batchnorm = false;
  cfg.gen_arch.reduce_sigma = 0.2;
  cfg.critic_arch.hidden = 64;
  cfg.critic_arch.depth = 3;
  cfg.critic_arch.penalty = false;
  cfg.critic_arch.output_scale = 0.1;
  cfg.eval_every = 0;  // final evaluation only
  cfg.eval.sample_points = 2500;
  cfg.eval.alpha_samples = 256;
  return cfg;
}

TrainConfig grid_reference_config() {
  TrainConfig cfg = ring_reference_config();
  cfg.data.kind = "grid";
  cfg.gen_arch.width = 256;  // the 256-feature / 8-block reference setup
  cfg.gen_arch.blocks = 8;
  return cfg;
}

struct SeedRun {
  TrainResult result;
  double wall_minutes = 0.0;
};

SeedRun train_seed(TrainConfig cfg, std::uint64_t seed, const std::string& out_dir) {
  cfg.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  SeedRun run{train(cfg, make_gmm(cfg.data), out_dir), 0.0};
  run.wall_minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  return run;
}

// ---- criteria ----

// Shared state: the ring seed-1 model backs criteria 5 and 8.
TrainResult g_ring_model;
bool g_ring_model_ready = false;

void criterion_1_ring() {
  const TrainConfig cfg = ring_reference_config();
  std::vector<double> modes, hq, minutes;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SeedRun run = train_seed(cfg, seed, "");
    const EvalReport& ev = run.result.record.final_eval;
    modes.push_back(static_cast<double>(ev.hq.modes_captured));
    hq.push_back(ev.hq.hq_percent);
    minutes.push_back(run.wall_minutes);
    std::cerr << "  ring seed " << seed << ": modes " << ev.hq.modes_captured << ", hq "
              << ev.hq.hq_percent << "%, " << run.wall_minutes << " min\n";
    if (seed == 1) {
      g_ring_model = std::move(run.result);
      g_ring_model_ready = true;
    }
  }
  const double mean_modes = mean_of(modes);
  const double mean_hq = mean_of(hq);
  const double worst_minutes = *std::max_element(minutes.begin(), minutes.end());
  const bool pass = mean_modes == 8.0 && mean_hq >= 55.0 && worst_minutes <= 15.0;
  std::ostringstream detail;
  detail << "mean modes " << mean_modes << " (need 8), mean HQ " << mean_hq
         << "% (need >= 55), worst seed " << worst_minutes << " min (budget 15)";
  report(1, "2D ring reference runs", pass, detail.str());
}

void criterion_2_grid() {
  const TrainConfig cfg = grid_reference_config();
  std::vector<double> modes, hq;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SeedRun run = train_seed(cfg, seed, "");
    const EvalReport& ev = run.result.record.final_eval;
    modes.push_back(static_cast<double>(ev.hq.modes_captured));
    hq.push_back(ev.hq.hq_percent);
    std::cerr << "  grid seed " << seed << ": modes " << ev.hq.modes_captured << ", hq "
              << ev.hq.hq_percent << "%, " << run.wall_minutes << " min\n";
  }
  const double mean_modes = mean_of(modes);
  const double mean_hq = mean_of(hq);
  const bool pass = mean_modes >= 14.0 && mean_hq >= 55.0;
  std::ostringstream detail;
  detail << "mean modes " << mean_modes << " (need >= 14), mean HQ " << mean_hq
         << "% (need >= 55) at 256 features / 8 blocks";
  report(2, "2D grid at the 256/8 configuration", pass, detail.str());
}

void criterion_3_sweep() {
  TrainConfig cfg = grid_reference_config();
  cfg.epochs = 40;  // shortened cells; the trend, not the absolute numbers
  const std::vector<std::size_t> widths{64, 128, 256};
  const std::vector<std::size_t> blocks{2, 4, 8};
  auto cells = expressiveness_sweep(cfg, widths, blocks, make_gmm(cfg.data));
  std::size_t min_modes = cells.front().modes_captured;
  std::size_t max_modes = cells.front().modes_captured;
  std::size_t default_modes = 0;
  std::ostringstream table;
  for (const auto& cell : cells) {
    min_modes = std::min(min_modes, cell.modes_captured);
    max_modes = std::max(max_modes, cell.modes_captured);
    if (cell.width == 256 && cell.blocks == 8) default_modes = cell.modes_captured;
    table << " (" << cell.width << "x" << cell.blocks << ")=" << cell.modes_captured;
    std::cerr << "  sweep width " << cell.width << " blocks " << cell.blocks << ": modes "
              << cell.modes_captured << ", hq " << cell.hq_percent << "%\n";
  }
  const bool not_constant = min_modes != max_modes;
  const bool someone_matches_default = max_modes >= default_modes;
  const bool pass = not_constant && someone_matches_default;
  std::ostringstream detail;
  detail << "modes across cells:" << table.str() << "; non-constant=" << not_constant
         << ", max >= default cell=" << someone_matches_default;
  report(3, "expressiveness sweep", pass, detail.str());
}

void criterion_4_change_of_variable() {
  Rng rng(411);
  const double worst = change_of_variable_worst_error(20, rng);
  report(4, "change-of-variable oracle (20 stacks, d <= 4)", worst <= 1e-6,
         "max |tracked - (prior - log|det J|)| = " + std::to_string(worst) + " (tol 1e-6)");
}

void criterion_5_normalization() {
  if (!g_ring_model_ready) {
    report(5, "normalization integrals", false,
           "ring model unavailable (criterion 1 did not run)");
    return;
  }
  const GmmSpec spec = ring_spec();
  const GridBounds outer{-6.0, 6.0, -6.0, 6.0};
  const GridBounds inner{-1.4, 1.4, -1.4, 1.4};

  // Exact GMM: fine inner panel over the modes.
  const double gmm_integral =
      integrate_density_two_scale(gmm_density_fn(spec), outer, 201, inner, 1401);

  // Trained critic P_theta.
  Rng alpha_rng(511);
  SamplingPolicy policy;
  policy.replace_prob = 0.3;
  policy.marginal_samples = 32;
  AlphaEstimate alpha =
      estimate_alpha(g_ring_model.critic, g_ring_model.gen, policy, 1024, alpha_rng);
  const CriticNet& critic = g_ring_model.critic;
  auto ptheta = [&critic, &alpha](double x, double y) {
    const double p[2] = {x, y};
    return critic_log_density_point(critic, p) - alpha.log_mean;
  };
  const double ptheta_integral = integrate_density_two_scale(ptheta, outer, 161, inner, 801);

  // Generator mixture density via pointwise marginalization.
  GeneratorEvaluator evaluator(g_ring_model.gen);
  SamplingPolicy gen_policy;
  gen_policy.replace_prob = 0.05;
  gen_policy.marginal_samples = 48;
  DensityFn mix = generator_mixture_density_fn(evaluator, gen_policy, 611);
  const double mix_integral = integrate_density_two_scale(mix, outer, 121, inner, 601);

  const bool pass = ptheta_integral >= 0.95 && ptheta_integral <= 1.05 &&
                    mix_integral >= 0.98 && mix_integral <= 1.02 && gmm_integral >= 0.99 &&
                    gmm_integral <= 1.01;
  std::ostringstream detail;
  detail << "P_theta " << ptheta_integral << " [0.95,1.05], generator mixture " << mix_integral
         << " [0.98,1.02], exact GMM " << gmm_integral << " [0.99,1.01]";
  report(5, "normalization integrals", pass, detail.str());
}

void criterion_6_conv_logdet() {
  Rng rng(611);
  const double worst = conv_logdet_worst_error(30, rng);
  report(6, "circular-conv log-det: Fourier vs dense (30 cases)", worst <= 1e-8,
         "max relative error = " + std::to_string(worst) + " (tol 1e-8)");
}

void criterion_7_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep = run_verify_suite("gradcheck", 711);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  bool pass = rep.all_pass;
  for (const auto& c : rep.checks) worst = std::max(worst, c.max_error / c.tolerance);
  pass = pass && seconds <= 60.0;
  std::ostringstream detail;
  detail << rep.checks.size() << " checks (primitives + both losses), worst error/tol ratio "
         << worst << ", " << seconds << " s (budget 60)";
  report(7, "finite-difference gradient checks", pass, detail.str());
}

void criterion_8_alpha_study() {
  if (!g_ring_model_ready) {
    report(8, "alpha convergence study", false, "ring model unavailable");
    return;
  }
  // Zero-variance stub: weights are exactly c, so the std is exactly zero.
  bool stub_exact = true;
  {
    Rng rng(811);
    Tensor log_q({64});
    for (std::size_t i = 0; i < 64; ++i) log_q[i] = rng.gaussian();
    Tensor log_n = log_q;
    const double log_c = 0.87;
    for (std::size_t i = 0; i < 64; ++i) log_n[i] += log_c;
    AlphaEstimate est = alpha_from_log_weights(log_n, log_q);
    stub_exact = est.stddev == 0.0 && est.mean == std::exp(log_c);
  }

  SamplingPolicy policy;
  policy.replace_prob = 0.3;
  policy.marginal_samples = 16;
  const CriticNet& critic = g_ring_model.critic;
  CriticFn fn = [&critic](const Tensor& v) { return critic_log_density_batch(critic, v); };
  Rng study_rng(812);
  auto table =
      alpha_convergence_study(fn, g_ring_model.gen, policy, {64, 1024}, 20, study_rng);
  const double std64 = table[0].stddev;
  const double std1024 = table[1].stddev;
  const bool shrinks = std1024 <= 0.5 * std64;
  std::ostringstream detail;
  detail << "std(n=64) " << std64 << " -> std(n=1024) " << std1024
         << " (need <= half); zero-variance stub exact: " << (stub_exact ? "yes" : "no");
  report(8, "alpha convergence study", shrinks && stub_exact, detail.str());
}

void criterion_9_single_sample_equivalence() {
  // Both formulations at n_gen = 1 must give identical critic gradients.
  CriticArchConfig cfg;
  cfg.hidden = 8;
  cfg.depth = 2;
  cfg.penalty = true;
  SamplingPolicy policy;
  policy.replace_prob = 0.05;
  policy.marginal_samples = 8;
  GenArchConfig ga;
  ga.width = 8;
  ga.blocks = 1;
  ga.batchnorm = false;

  double worst = 0.0;
  for (int state = 0; state < 10; ++state) {
    Rng init(900 + state);
    CriticNet critic = make_toy_critic(cfg);
    critic.init_params(init);
    GeneratorNet gen = make_toy_generator(ga);
    gen.init_params(init);
    Rng data_rng(950 + state);
    Tensor real({1, 2});
    real.at(0, 0) = data_rng.gaussian();
    real.at(0, 1) = data_rng.gaussian();

    Rng rng_a(1000 + state);
    Tape tape_a;
    BoundParams bound_a = bind_params(tape_a, critic.params(), true);
    auto loss_a = build_discriminator_loss(tape_a, critic, bound_a, gen, policy, real, 1,
                                           rng_a, NetMode::kEval);
    tape_a.backward(loss_a.total);

    Rng rng_b(1000 + state);
    MixtureSamples fake = draw_mixture_samples(gen, policy, 1, rng_b, NetMode::kEval);
    Tape tape_b;
    BoundParams bound_b = bind_params(tape_b, critic.params(), true);
    Var logn_x = critic_log_density(critic, bound_b, tape_b.constant(real));
    Var logn_y = critic_log_density(critic, bound_b, tape_b.constant(fake.values));
    tape_b.backward(sub(mean_all(logn_x), mean_all(logn_y)));

    for (const auto& p : critic.params().params()) {
      const Tensor& ga_grad = bound_a.at(p.name)->grad;
      const Tensor& gb_grad = bound_b.at(p.name)->grad;
      for (std::size_t i = 0; i < ga_grad.size(); ++i) {
        const double denom = std::max({1.0, std::abs(ga_grad[i]), std::abs(gb_grad[i])});
        worst = std::max(worst, std::abs(ga_grad[i] - gb_grad[i]) / denom);
      }
    }
  }
  report(9, "single-sample objective equals the plain adversarial form", worst <= 1e-12,
         "max relative gradient difference over 10 states = " + std::to_string(worst));
}

void criterion_10_determinism() {
  TrainConfig cfg = ring_reference_config();
  cfg.epochs = 5;  // byte determinism is config-independent; keep the check fast
  cfg.eval_every = 2;
  cfg.eval.sample_points = 300;
  cfg.eval.alpha_samples = 32;
  cfg.eval.bpd_points = 128;
  cfg.eval.kl_resolution = 33;
  cfg.seed = 77;

  namespace fs = std::filesystem;
  const std::string dir_a = "acceptance_det_a";
  const std::string dir_b = "acceptance_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  train(cfg, make_gmm(cfg.data), dir_a);
  train(cfg, make_gmm(cfg.data), dir_b);

  auto file_bytes = [](const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  };
  bool identical = true;
  for (const char* name :
       {"/final/gen.params", "/final/critic.params", "/final/meta.json", "/best/gen.params",
        "/best/critic.params", "/best/meta.json"}) {
    const std::string a = file_bytes(dir_a + name);
    const std::string b = file_bytes(dir_b + name);
    if (a.empty() || a != b) {
      identical = false;
      std::cerr << "  determinism mismatch in " << name << "\n";
    }
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  report(10, "identical-seed runs are byte-identical", identical,
         identical ? "checkpoints and records match byte-for-byte"
                   : "byte mismatch between identical-seed runs");
}

}  // namespace

int main(int argc, char** argv) {
  set_max_threads(2);
  bool quick = false;  // skip the training-heavy criteria (debug aid)
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
  }

  std::cout << "LED acceptance suite" << std::endl;
  if (!quick) {
    criterion_1_ring();
  }
  criterion_4_change_of_variable();
  criterion_6_conv_logdet();
  criterion_7_gradients();
  criterion_9_single_sample_equivalence();
  criterion_10_determinism();
  if (!quick) {
    criterion_5_normalization();
    criterion_8_alpha_study();
    criterion_2_grid();
    criterion_3_sweep();
  }

  std::size_t passed = 0;
  for (const auto& r : g_results) passed += r.pass ? 1 : 0;
  std::cout << "----" << std::endl;
  std::cout << "acceptance: " << passed << "/" << g_results.size() << " criteria passed"
            << std::endl;
  return passed == g_results.size() ? 0 : 1;
}
