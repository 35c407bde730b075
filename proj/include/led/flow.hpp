#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "led/autodiff.hpp"
#include "led/linalg.hpp"
#include "led/optim.hpp"
#include "led/rng.hpp"

namespace led {

// ---- layer catalogue ----
// Every layer maps a batch of activations forward and updates the per-sample
// accumulated log-density. Square layers divide by |det J|; inflation
// multiplies in the density of fresh noise; reduction divides by an assumed
// Gaussian conditional of the discarded coordinates given their kept partner.

struct LinearLayer {
  std::size_t dim = 0;  // square weight
};

struct ActivationLayer {
  SmoothReluParams params;
};

struct BatchNormLayer {
  std::size_t dim = 0;
  double eps = 1e-5;
  double momentum = 0.1;
};

struct CircularConvLayer {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t ksize_h = 1;
  std::size_t ksize_w = 1;
  std::size_t flat_dim() const { return channels * height * width; }
};

struct InflateLayer {
  std::size_t n_add = 1;
  double sigma = 1.0;
};

struct ReduceLayer {
  std::size_t keep = 0;    // kept leading coordinates
  double sigma = 0.2;      // conditional std of a discarded coordinate
};

using LayerSpec = std::variant<LinearLayer, ActivationLayer, BatchNormLayer, CircularConvLayer,
                               InflateLayer, ReduceLayer>;

// kTrain: batch statistics, running averages updated (the net's own
// optimization step). kTrainStatic: batch statistics without any mutation
// (e.g. sampling fakes inside a critic step must leave the generator
// byte-identical). kEval: running averages, read-only.
enum class NetMode { kTrain, kTrainStatic, kEval };

// A batch of points with their accumulated log P, as graph nodes so that
// losses can differentiate through the tracked density.
struct TrackedBatch {
  Var values;       // (B, D)
  Var log_density;  // (B)
};

struct TrackedSample {
  Tensor value;  // (D)
  double log_density = 0.0;
};

// Bound copies of a ParamStore's tensors on a tape.
struct BoundParams {
  std::unordered_map<std::string, Var> vars;

  const Var& at(const std::string& name) const;
  bool requires_grad = false;
};
BoundParams bind_params(Tape& tape, const ParamStore& store, bool requires_grad);
// Collects leaf gradients aligned with the store's trainable parameters.
std::vector<Tensor> trainable_grads(const BoundParams& bound, const ParamStore& store);

// ---- layer forwards (graph) ----
Var standard_gaussian_log_density_rows(const Var& x, double sigma = 1.0);
double standard_gaussian_log_density(std::span<const double> x, double sigma = 1.0);

TrackedBatch linear_forward(const TrackedBatch& s, const Var& weight, const Var& bias);
TrackedBatch activation_forward(const TrackedBatch& s, const SmoothReluParams& p);
// Statistics enter as constants; the Jacobian is the diagonal gamma/sqrt(var+eps).
TrackedBatch batchnorm_forward(const TrackedBatch& s, const Var& gamma, const Var& beta,
                               const Tensor& mean, const Tensor& var, double eps);
TrackedBatch inflate_forward(const TrackedBatch& s, const Tensor& noise, double sigma);
TrackedBatch inflate_forward(const TrackedBatch& s, std::size_t n_add, double sigma, Rng& rng);
TrackedBatch reduce_forward(const TrackedBatch& s, std::size_t keep, double sigma_m);
TrackedBatch circular_conv_forward(const TrackedBatch& s, const Var& kernel,
                                   const CircularConvLayer& spec);

// Pairing of a discarded coordinate with its kept partner: positional, with
// wrap-around when more coordinates are discarded than kept.
std::vector<std::size_t> reduce_pairing(std::size_t keep, std::size_t discarded);

// log|det| of the circular convolution's linear map via Fourier
// diagonalization: product over frequency bins of the per-frequency
// channel-mixing matrix determinant.
double circular_conv_logdet_fft(const Tensor& kernel, const CircularConvLayer& spec);
// Dense counterpart used as oracle and by the pointwise evaluator.
Tensor circular_conv_dense_matrix(const Tensor& kernel, const CircularConvLayer& spec);

// ---- generator ----
class GeneratorNet {
 public:
  GeneratorNet() = default;
  GeneratorNet(std::size_t latent_dim, std::vector<LayerSpec> layers);

  void init_params(Rng& rng);

  std::size_t latent_dim() const { return latent_dim_; }
  std::size_t output_dim() const { return dims_.back(); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  // dims()[k] is the input width of layer k; dims().back() the output width.
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t reduce_count() const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  static std::string param_name(std::size_t layer, const char* field);

  std::string config_json() const;
  static GeneratorNet from_config_json(const std::string& json_text);

 private:
  std::size_t latent_dim_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> dims_;
  ParamStore params_;

  void compute_dims();
};

// Full pass: initializes log-density to the standard-normal prior of z and
// threads it through every layer. Train mode uses batch statistics for batch
// norm (and updates running averages); eval mode uses running averages.
TrackedBatch generator_forward(Tape& tape, GeneratorNet& net, const BoundParams& bound,
                               const Tensor& z, Rng& noise_rng, NetMode mode);

// Convenience single-sample pass without gradients.
TrackedSample generator_forward_sample(GeneratorNet& net, const Tensor& z, Rng& noise_rng);

// Samples n latent vectors and runs the forward pass without gradients,
// returning plain tensors.
struct ForwardSamples {
  Tensor values;       // (n, D)
  Tensor log_density;  // (n)
};
ForwardSamples generator_sample_raw(GeneratorNet& net, std::size_t n, Rng& rng, NetMode mode);

// ---- pointwise density queries ----
// Evaluates the tracked push-forward density at arbitrary points by walking
// the layer stack backwards: bijective layers are inverted exactly, inflation
// splits off its noise block, and each reduction is marginalized by Monte
// Carlo with the assumed conditional as the proposal. With at most one
// reduction the result is unbiased for the true output density; integrals of
// exp(log density) over a covering grid converge to 1 for any stack.
class GeneratorEvaluator {
 public:
  explicit GeneratorEvaluator(const GeneratorNet& net);

  // marginal_samples controls the per-reduction Monte Carlo size.
  double log_density_at(std::span<const double> point, Rng& rng,
                        std::size_t marginal_samples) const;

  std::size_t output_dim() const { return net_->output_dim(); }

 private:
  struct FrozenLinear {
    Lu lu;
    std::vector<double> bias;
    double log_abs_det;
  };
  struct FrozenBatchNorm {
    std::vector<double> gamma, beta, mean, inv_std;
    double log_det;  // sum over features of log(|gamma| * inv_std)
  };
  struct FrozenConv {
    Lu lu;
    double log_abs_det;
  };
  using Frozen = std::variant<FrozenLinear, ActivationLayer, FrozenBatchNorm, FrozenConv,
                              InflateLayer, ReduceLayer>;

  const GeneratorNet* net_;
  std::vector<Frozen> frozen_;

  double eval_from(std::size_t layer_count, std::vector<double> point, Rng& rng,
                   std::size_t marginal_samples) const;
};

}  // namespace led
