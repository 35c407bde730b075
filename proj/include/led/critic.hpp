#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "led/flow.hpp"
#include "led/sampling.hpp"

namespace led {

// The critic is an unnormalized density: its scalar head s(x) is the log of
// N_theta up to the optional perpendicular-component penalty, so N_theta is
// an exponential of a finite scalar and positive everywhere.

struct CriticLinear {
  std::size_t in = 0;
  std::size_t out = 0;
};

struct CriticActivation {
  SmoothReluParams params;
};

using CriticLayerSpec = std::variant<CriticLinear, CriticActivation>;

class CriticNet {
 public:
  CriticNet() = default;
  CriticNet(std::size_t input_dim, std::vector<CriticLayerSpec> layers);

  void init_params(Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  const std::vector<CriticLayerSpec>& layers() const { return layers_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  static std::string param_name(std::size_t layer, const char* field);

  std::string config_json() const;
  static CriticNet from_config_json(const std::string& json_text);

  // Config knobs. The penalty applies at every linear layer that projects to
  // a smaller dimension; literal_penalty switches to the rank-1 deflation
  // formula printed in the source text instead of the orthogonal-complement
  // projection.
  bool penalty_enabled = true;
  bool literal_penalty = false;
  double output_scale = 1.0;

 private:
  std::size_t input_dim_ = 0;
  std::vector<CriticLayerSpec> layers_;
  ParamStore params_;
};

// Component of each row of x orthogonal to the row space of w (o2,o1), o2<o1;
// computed as x - w^T (w w^T)^-1 w x, which stays differentiable in w.
// Throws on rank-deficient w.
Var perpendicular_rows(const Var& x, const Var& w);
// Rank-1 deflation along u = w^T w x / |w^T w x| (the literal formula).
Var perpendicular_rows_literal(const Var& x, const Var& w);

// Raw single-vector version.
Tensor perpendicular_component(const Tensor& w, const Tensor& x);

// log N_theta over a batch: output_scale * s(x) minus the sum of penalty
// norms when enabled. Returns shape (B).
Var critic_log_density(const CriticNet& net, const BoundParams& bound,
                       const Var& x);

Tensor critic_log_density_batch(const CriticNet& net, const Tensor& x);
double critic_log_density_point(const CriticNet& net, std::span<const double> x);

// ---- normalization constant ----
struct AlphaEstimate {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n_samples = 0;
  double log_mean = 0.0;  // log-space value the mean was produced from
};

// Importance-sampled alpha from aligned log N_theta and sampling log-density
// vectors; computed in log space.
AlphaEstimate alpha_from_log_weights(const Tensor& log_n, const Tensor& log_q);

using CriticFn = std::function<Tensor(const Tensor& values)>;

struct AlphaOptions {
  // Divide by the exact marginal mixture density (pointwise evaluator)
  // instead of the tracked forward density. The tracked value equals the
  // marginal only when the reduction's assumed conditional holds, and a
  // mismatch biases alpha; the exact divisor keeps the estimator honest for
  // any generator state. Tracked mode is retained for parity with the
  // training-side weights.
  bool exact_divisor = true;
  std::size_t marginal_samples = 32;
};

// Monte Carlo estimate of alpha = E_{y~Q}[N_theta(y)/Q(y)] with Q the
// policy's sampling mixture. Never cached across parameter updates.
AlphaEstimate estimate_alpha(const CriticNet& critic, GeneratorNet& gen,
                             const SamplingPolicy& policy, std::size_t n, Rng& rng,
                             const AlphaOptions& opts = {});
// Stub-friendly variant used by tests and the convergence study.
AlphaEstimate estimate_alpha_with(const CriticFn& critic_fn, GeneratorNet& gen,
                                  const SamplingPolicy& policy, std::size_t n, Rng& rng,
                                  const AlphaOptions& opts = {});

// log P_theta(x) = log N_theta(x) - log alpha.
double log_p_theta(const CriticNet& net, const AlphaEstimate& alpha,
                   std::span<const double> x);

}  // namespace led
