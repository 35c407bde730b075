#pragma once

#include <functional>
#include <string>
#include <vector>

#include "led/critic.hpp"
#include "led/data.hpp"

namespace led {

// ---- sample quality ----
struct HqResult {
  std::size_t modes_captured = 0;         // modes with at least one HQ sample
  std::size_t modes_captured_strict = 0;  // modes holding >= 1% of all samples (HQ)
  double hq_percent = 0.0;
};

// A sample is high quality iff its distance to the nearest mode is <= 3 sigma;
// a mode is captured iff at least one HQ sample is nearest to it.
HqResult hq_and_modes(const Tensor& samples, const GmmSpec& spec);

// ---- encoding efficiency ----
struct BitsPerDim {
  double nats_per_dim = 0.0;
  double bits_per_dim = 0.0;
};

// Critic-side: mean over the dataset of -log P_theta(x) / D (bits divide by ln 2).
BitsPerDim bits_per_dim(const CriticNet& critic, const AlphaEstimate& alpha,
                        const Tensor& dataset);
// Generator-side: -log P_G at generated points through the tracked flow.
BitsPerDim generator_bits_per_dim(GeneratorNet& gen, std::size_t n, Rng& rng);

// ---- alpha approximation study ----
struct AlphaStudyRow {
  std::size_t n_samples = 0;
  double mean = 0.0;
  double stddev = 0.0;  // across repeats
};

std::vector<AlphaStudyRow> alpha_convergence_study(const CriticFn& critic_fn,
                                                   GeneratorNet& gen,
                                                   const SamplingPolicy& policy,
                                                   const std::vector<std::size_t>& sample_counts,
                                                   std::size_t repeats, Rng& rng,
                                                   const AlphaOptions& opts = {});

// ---- density grids ----
struct GridBounds {
  double x0 = -1.0, x1 = 1.0;
  double y0 = -1.0, y1 = 1.0;
};

using DensityFn = std::function<double(double x, double y)>;  // returns log density

struct DensityGrid {
  GridBounds bounds;
  std::size_t resolution = 0;   // nodes per axis
  Tensor log_density;           // (resolution, resolution); row = x index
  double integral = 0.0;        // trapezoidal integral of exp(log_density)
};

// Evaluates log density on a regular grid (endpoints included) and returns
// the trapezoidal integral of the exponentiated grid. Rows are evaluated in
// parallel; fn must be safe to call concurrently.
DensityGrid density_grid(const DensityFn& fn, const GridBounds& bounds,
                         std::size_t resolution);

// Batched variant for evaluators that amortize over many points (one call
// per grid row).
using BatchDensityFn = std::function<Tensor(const Tensor& points)>;  // (m,2) -> (m)
DensityGrid density_grid(const BatchDensityFn& fn, const GridBounds& bounds,
                         std::size_t resolution);

BatchDensityFn critic_batch_density_fn(const CriticNet& critic, double log_alpha);
BatchDensityFn gmm_batch_density_fn(const GmmSpec& spec);

// Integral refined with a finer inner box; used when the density has sharp
// ridges far narrower than the outer cell size.
double integrate_density_two_scale(const DensityFn& fn, const GridBounds& outer,
                                   std::size_t outer_res, const GridBounds& inner,
                                   std::size_t inner_res);

// Mode bounding box padded by pad_sigmas * sigma.
GridBounds default_bounds(const GmmSpec& spec, double pad_sigmas = 6.0);

// KL(P || Q) between two log-density grids over identical nodes, after
// normalizing both to discrete distributions. Zero for identical grids.
double grid_kl(const DensityGrid& p, const DensityGrid& q);

void export_density_grid_csv(const DensityGrid& grid, const std::string& csv_path,
                             const std::string& sidecar_json_path);

// Deterministic pointwise evaluators for the grid machinery.
DensityFn gmm_density_fn(const GmmSpec& spec);
DensityFn critic_density_fn(const CriticNet& critic, double log_alpha);
// Generator mixture density; randomness for the marginalization is derived
// from the point coordinates, so the function is pure and thread-safe.
DensityFn generator_mixture_density_fn(const GeneratorEvaluator& evaluator,
                                       const SamplingPolicy& policy, std::uint64_t seed);

// ---- per-checkpoint evaluation ----
struct EvalOptions {
  std::size_t sample_points = 2500;  // HQ protocol size
  std::size_t alpha_samples = 256;
  std::size_t bpd_points = 2048;
  std::size_t kl_resolution = 129;
};

struct EvalReport {
  HqResult hq;
  BitsPerDim test_bpd;
  BitsPerDim gen_bpd;
  AlphaEstimate alpha;
  double kl_data_model = 0.0;  // KL(P_data || P_theta) on the default grid

  std::string to_json() const;
};

EvalReport evaluate_model(const CriticNet& critic, GeneratorNet& gen,
                          const SamplingPolicy& policy, const GmmSpec& spec,
                          const EvalOptions& opts, Rng& rng);

}  // namespace led
