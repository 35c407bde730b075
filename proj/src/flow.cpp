#include "led/flow.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "led/linalg.hpp"

namespace led {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double gaussian_log_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return -0.5 * kLog2Pi - std::log(sigma) - 0.5 * z * z;
}

}  // namespace

const Var& BoundParams::at(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) fail_validation("BoundParams: unknown parameter " + name);
  return it->second;
}

BoundParams bind_params(Tape& tape, const ParamStore& store, bool requires_grad) {
  BoundParams bound;
  bound.requires_grad = requires_grad;
  for (const auto& p : store.params()) {
    bound.vars.emplace(p.name, tape.leaf(p.value, requires_grad && p.trainable));
  }
  return bound;
}

std::vector<Tensor> trainable_grads(const BoundParams& bound, const ParamStore& store) {
  std::vector<Tensor> grads;
  grads.reserve(store.count());
  for (const auto& p : store.params()) {
    if (!p.trainable) continue;
    const Var& v = bound.at(p.name);
    grads.push_back(v->grad.empty() ? Tensor::zeros(p.value.shape()) : v->grad);
  }
  return grads;
}

double standard_gaussian_log_density(std::span<const double> x, double sigma) {
  double acc = 0.0;
  for (double v : x) acc += gaussian_log_pdf(v, 0.0, sigma);
  return acc;
}

Var standard_gaussian_log_density_rows(const Var& x, double sigma) {
  const std::size_t d = x->value.cols();
  const double c = d * (-0.5 * kLog2Pi - std::log(sigma));
  Var sq = sum_rows(mul(x, x));
  return add_const(scale(sq, -0.5 / (sigma * sigma)), c);
}

// ---- layer forwards ----

TrackedBatch linear_forward(const TrackedBatch& s, const Var& weight, const Var& bias) {
  const std::size_t d = s.values->value.cols();
  if (weight->value.ndim() != 2 || weight->value.rows() != weight->value.cols() ||
      weight->value.rows() != d) {
    fail_validation("linear_forward: weight must be square " + std::to_string(d) + "x" +
                    std::to_string(d) + ", got " + weight->value.shape_str());
  }
  Var y = add_row(matmul_nt(s.values, weight), bias);
  Var ld = logdet(weight);  // throws on a singular weight
  Var logd = add_broadcast(s.log_density, scale(ld, -1.0));
  return {y, logd};
}

TrackedBatch activation_forward(const TrackedBatch& s, const SmoothReluParams& p) {
  Var y = smooth_relu(s.values, p);
  Var ld = sum_rows(smooth_relu_log_deriv(s.values, p));
  return {y, sub(s.log_density, ld)};
}

TrackedBatch batchnorm_forward(const TrackedBatch& s, const Var& gamma, const Var& beta,
                               const Tensor& mean, const Tensor& var, double eps) {
  Tape& tape = *s.values->tape;
  const std::size_t d = s.values->value.cols();
  if (gamma->value.size() != d || mean.size() != d || var.size() != d) {
    fail_validation("batchnorm_forward: feature width mismatch");
  }
  Tensor neg_mean({d});
  Tensor inv_std({d});
  double log_inv_std_sum = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double denom = var[j] + eps;
    if (!(denom > 0.0)) fail_validation("batchnorm_forward: Var + eps must be positive");
    if (gamma->value[j] == 0.0) {
      fail_validation("batchnorm_forward: gamma is zero at feature " + std::to_string(j) +
                      " (zero Jacobian entry)");
    }
    neg_mean[j] = -mean[j];
    inv_std[j] = 1.0 / std::sqrt(denom);
    log_inv_std_sum += std::log(inv_std[j]);
  }
  Var centered = add_row(s.values, tape.constant(neg_mean));
  Var scaled = mul_row(centered, tape.constant(inv_std));
  Var y = add_row(mul_row(scaled, gamma), beta);
  // log|det J| = sum_j log(|gamma_j| / sqrt(var_j + eps)); log|g| as log(g^2)/2
  // keeps it differentiable without an abs primitive.
  Var log_abs_gamma = scale(sum_all(vlog(mul(gamma, gamma))), 0.5);
  Var ld = add_const(log_abs_gamma, log_inv_std_sum);
  Var logd = add_broadcast(s.log_density, scale(ld, -1.0));
  return {y, logd};
}

TrackedBatch inflate_forward(const TrackedBatch& s, const Tensor& noise, double sigma) {
  if (!(sigma > 0.0)) fail_validation("inflate_forward: sigma must be positive");
  Tape& tape = *s.values->tape;
  const std::size_t rows = s.values->value.rows();
  if (noise.ndim() != 2 || noise.rows() != rows || noise.cols() < 1) {
    fail_validation("inflate_forward: noise must be (batch, n_add >= 1)");
  }
  Var y = concat_cols(s.values, tape.constant(noise));
  Tensor noise_logd({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < noise.cols(); ++j) {
      acc += gaussian_log_pdf(noise.at(i, j), 0.0, sigma);
    }
    noise_logd[i] = acc;
  }
  Var logd = add(s.log_density, tape.constant(noise_logd));
  return {y, logd};
}

TrackedBatch inflate_forward(const TrackedBatch& s, std::size_t n_add, double sigma, Rng& rng) {
  if (n_add < 1) fail_validation("inflate_forward: n_add must be >= 1");
  if (!(sigma > 0.0)) fail_validation("inflate_forward: sigma must be positive");
  const std::size_t rows = s.values->value.rows();
  Tensor noise({rows, n_add});
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = rng.gaussian(0.0, sigma);
  return inflate_forward(s, noise, sigma);
}

std::vector<std::size_t> reduce_pairing(std::size_t keep, std::size_t discarded) {
  std::vector<std::size_t> idx(discarded);
  for (std::size_t j = 0; j < discarded; ++j) idx[j] = j % keep;
  return idx;
}

TrackedBatch reduce_forward(const TrackedBatch& s, std::size_t keep, double sigma_m) {
  if (!(sigma_m > 0.0)) fail_validation("reduce_forward: sigma must be positive");
  const std::size_t d = s.values->value.cols();
  if (keep == 0 || keep >= d) {
    fail_validation("reduce_forward: kept dimension must be in [1, input dim)");
  }
  const std::size_t discarded = d - keep;
  Var kept = slice_cols(s.values, 0, keep);
  Var dropped = slice_cols(s.values, keep, d);
  Var paired = gather_cols(kept, reduce_pairing(keep, discarded));
  Var diff = sub(dropped, paired);
  Var sq = sum_rows(mul(diff, diff));
  const double c = discarded * (-0.5 * kLog2Pi - std::log(sigma_m));
  Var cond_logd = add_const(scale(sq, -0.5 / (sigma_m * sigma_m)), c);
  return {kept, sub(s.log_density, cond_logd)};
}

TrackedBatch circular_conv_forward(const TrackedBatch& s, const Var& kernel,
                                   const CircularConvLayer& spec) {
  if (s.values->value.cols() != spec.flat_dim()) {
    fail_validation("circular_conv_forward: input width must be channels*height*width");
  }
  Var dense = circulant_embed(kernel, spec.channels, spec.height, spec.width);
  Var y = matmul_nt(s.values, dense);
  Var logd = add_broadcast(s.log_density, scale(logdet(dense), -1.0));
  return {y, logd};
}

double circular_conv_logdet_fft(const Tensor& kernel, const CircularConvLayer& spec) {
  const auto& ks = kernel.shape();
  if (ks.size() != 4 || ks[0] != spec.channels || ks[1] != spec.channels ||
      ks[2] != spec.ksize_h || ks[3] != spec.ksize_w) {
    fail_validation("circular_conv_logdet_fft: kernel must be (C,C,kh,kw)");
  }
  const std::size_t c = spec.channels, h = spec.height, w = spec.width;
  double total = 0.0;
  std::vector<std::complex<double>> freq(c * c);
  for (std::size_t p = 0; p < h; ++p) {
    for (std::size_t q = 0; q < w; ++q) {
      std::fill(freq.begin(), freq.end(), std::complex<double>(0.0, 0.0));
      for (std::size_t o = 0; o < c; ++o) {
        for (std::size_t i = 0; i < c; ++i) {
          std::complex<double> acc(0.0, 0.0);
          for (std::size_t a = 0; a < spec.ksize_h; ++a) {
            for (std::size_t b = 0; b < spec.ksize_w; ++b) {
              const double phase =
                  2.0 * std::numbers::pi *
                  (static_cast<double>(p * a) / h + static_cast<double>(q * b) / w);
              const double kv = kernel[((o * c + i) * spec.ksize_h + a) * spec.ksize_w + b];
              acc += kv * std::complex<double>(std::cos(phase), std::sin(phase));
            }
          }
          freq[o * c + i] = acc;
        }
      }
      total += complex_log_abs_det(freq, c);
    }
  }
  return total;
}

Tensor circular_conv_dense_matrix(const Tensor& kernel, const CircularConvLayer& spec) {
  const std::size_t c = spec.channels, h = spec.height, w = spec.width;
  const std::size_t dim = spec.flat_dim();
  Tensor dense({dim, dim});
  for (std::size_t o = 0; o < c; ++o)
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t a = 0; a < spec.ksize_h; ++a)
        for (std::size_t b = 0; b < spec.ksize_w; ++b) {
          const double kv = kernel[((o * c + i) * spec.ksize_h + a) * spec.ksize_w + b];
          for (std::size_t x = 0; x < h; ++x)
            for (std::size_t y = 0; y < w; ++y) {
              const std::size_t row = (o * h + x) * w + y;
              const std::size_t col = (i * h + (x + a) % h) * w + (y + b) % w;
              dense.at(row, col) += kv;
            }
        }
  return dense;
}

// ---- generator ----

GeneratorNet::GeneratorNet(std::size_t latent_dim, std::vector<LayerSpec> layers)
    : latent_dim_(latent_dim), layers_(std::move(layers)) {
  if (latent_dim_ == 0) fail_validation("GeneratorNet: latent dim must be positive");
  compute_dims();
}

void GeneratorNet::compute_dims() {
  dims_.clear();
  dims_.push_back(latent_dim_);
  std::size_t cur = latent_dim_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      if (lin->dim != cur) {
        fail_validation("GeneratorNet: linear layer " + std::to_string(k) + " expects width " +
                        std::to_string(lin->dim) + " but input is " + std::to_string(cur));
      }
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      if (bn->dim != cur) fail_validation("GeneratorNet: batchnorm width mismatch");
    } else if (const auto* conv = std::get_if<CircularConvLayer>(&layer)) {
      if (conv->flat_dim() != cur) fail_validation("GeneratorNet: conv width mismatch");
    } else if (const auto* inf = std::get_if<InflateLayer>(&layer)) {
      if (inf->n_add < 1) fail_validation("GeneratorNet: inflate needs n_add >= 1");
      cur += inf->n_add;
    } else if (const auto* red = std::get_if<ReduceLayer>(&layer)) {
      if (red->keep == 0 || red->keep >= cur) {
        fail_validation("GeneratorNet: reduce keep must be in [1, input width)");
      }
      cur = red->keep;
    }
    dims_.push_back(cur);
  }
}

std::size_t GeneratorNet::reduce_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += std::holds_alternative<ReduceLayer>(l) ? 1 : 0;
  return n;
}

std::string GeneratorNet::param_name(std::size_t layer, const char* field) {
  return "layer" + std::to_string(layer) + "." + field;
}

void GeneratorNet::init_params(Rng& rng) {
  params_ = ParamStore();
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const std::size_t in_dim = dims_[k];
    if (std::holds_alternative<LinearLayer>(layers_[k])) {
      // Orthogonal start keeps the weight full rank at step zero. A linear
      // feeding an activation additionally gets the slope-compensating gain
      // sqrt(2/(1+(beta/alpha)^2)); with unit gain the activations contract
      // every layer and the initial push-forward collapses to a point mass.
      Tensor w = random_orthogonal(in_dim, rng);
      if (k + 1 < layers_.size()) {
        if (const auto* act = std::get_if<ActivationLayer>(&layers_[k + 1])) {
          const double ratio = act->params.beta / act->params.alpha;
          const double gain = std::sqrt(2.0 / (1.0 + ratio * ratio));
          for (auto& v : w.flat()) v *= gain;
        }
      }
      params_.add(param_name(k, "weight"), std::move(w));
      params_.add(param_name(k, "bias"), Tensor::zeros({in_dim}));
    } else if (std::holds_alternative<BatchNormLayer>(layers_[k])) {
      params_.add(param_name(k, "gamma"), Tensor::full({in_dim}, 1.0));
      params_.add(param_name(k, "beta"), Tensor::zeros({in_dim}));
      params_.add(param_name(k, "running_mean"), Tensor::zeros({in_dim}), /*trainable=*/false);
      params_.add(param_name(k, "running_var"), Tensor::full({in_dim}, 1.0),
                  /*trainable=*/false);
    } else if (const auto* conv = std::get_if<CircularConvLayer>(&layers_[k])) {
      Tensor kernel({conv->channels, conv->channels, conv->ksize_h, conv->ksize_w});
      for (std::size_t i = 0; i < kernel.size(); ++i) kernel[i] = 0.01 * rng.gaussian();
      for (std::size_t ch = 0; ch < conv->channels; ++ch) {
        kernel[((ch * conv->channels + ch) * conv->ksize_h + 0) * conv->ksize_w + 0] += 1.0;
      }
      params_.add(param_name(k, "kernel"), std::move(kernel));
    }
  }
}

TrackedBatch generator_forward(Tape& tape, GeneratorNet& net, const BoundParams& bound,
                               const Tensor& z, Rng& noise_rng, NetMode mode) {
  if (z.ndim() != 2 || z.cols() != net.latent_dim()) {
    fail_validation("generator_forward: latent batch must be (n, " +
                    std::to_string(net.latent_dim()) + ")");
  }
  const std::size_t rows = z.rows();
  Tensor prior_logd({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    prior_logd[i] = standard_gaussian_log_density({z.data() + i * z.cols(), z.cols()});
  }
  TrackedBatch s{tape.constant(z), tape.constant(prior_logd)};

  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& layer = net.layers()[k];
    if (std::holds_alternative<LinearLayer>(layer)) {
      s = linear_forward(s, bound.at(GeneratorNet::param_name(k, "weight")),
                         bound.at(GeneratorNet::param_name(k, "bias")));
    } else if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
      s = activation_forward(s, act->params);
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      const std::size_t d = bn->dim;
      Tensor mean({d}), var({d});
      if (mode != NetMode::kEval) {
        const Tensor& x = s.values->value;
        const std::size_t b = x.rows();
        for (std::size_t j = 0; j < d; ++j) {
          double m = 0.0;
          for (std::size_t i = 0; i < b; ++i) m += x.at(i, j);
          m /= static_cast<double>(b);
          double v = 0.0;
          for (std::size_t i = 0; i < b; ++i) v += (x.at(i, j) - m) * (x.at(i, j) - m);
          v /= static_cast<double>(b);
          mean[j] = m;
          var[j] = v;
        }
        if (mode == NetMode::kTrain) {
          Tensor& rmean = net.params().at(GeneratorNet::param_name(k, "running_mean")).value;
          Tensor& rvar = net.params().at(GeneratorNet::param_name(k, "running_var")).value;
          for (std::size_t j = 0; j < d; ++j) {
            rmean[j] = (1.0 - bn->momentum) * rmean[j] + bn->momentum * mean[j];
            rvar[j] = (1.0 - bn->momentum) * rvar[j] + bn->momentum * var[j];
          }
        }
      } else {
        mean = net.params().at(GeneratorNet::param_name(k, "running_mean")).value;
        var = net.params().at(GeneratorNet::param_name(k, "running_var")).value;
      }
      s = batchnorm_forward(s, bound.at(GeneratorNet::param_name(k, "gamma")),
                            bound.at(GeneratorNet::param_name(k, "beta")), mean, var, bn->eps);
    } else if (const auto* conv = std::get_if<CircularConvLayer>(&layer)) {
      s = circular_conv_forward(s, bound.at(GeneratorNet::param_name(k, "kernel")), *conv);
    } else if (const auto* inf = std::get_if<InflateLayer>(&layer)) {
      s = inflate_forward(s, inf->n_add, inf->sigma, noise_rng);
    } else if (const auto* red = std::get_if<ReduceLayer>(&layer)) {
      s = reduce_forward(s, red->keep, red->sigma);
    }
  }
  return s;
}

TrackedSample generator_forward_sample(GeneratorNet& net, const Tensor& z, Rng& noise_rng) {
  Tape tape;
  BoundParams bound = bind_params(tape, net.params(), false);
  Tensor zb = z.reshaped({1, z.size()});
  TrackedBatch out = generator_forward(tape, net, bound, zb, noise_rng, NetMode::kEval);
  TrackedSample sample;
  sample.value = out.values->value.reshaped({out.values->value.cols()});
  sample.log_density = out.log_density->value[0];
  return sample;
}

ForwardSamples generator_sample_raw(GeneratorNet& net, std::size_t n, Rng& rng, NetMode mode) {
  Tensor z({n, net.latent_dim()});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
  Tape tape;
  BoundParams bound = bind_params(tape, net.params(), false);
  TrackedBatch out = generator_forward(tape, net, bound, z, rng, mode);
  return {out.values->value, out.log_density->value};
}

// ---- config serialization ----

namespace {

nlohmann::json layer_to_json(const LayerSpec& layer) {
  nlohmann::json j;
  if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
    j["type"] = "linear";
    j["dim"] = lin->dim;
  } else if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
    j["type"] = "activation";
    j["alpha"] = act->params.alpha;
    j["beta"] = act->params.beta;
    j["u0"] = act->params.u0;
    j["t0"] = act->params.t0;
  } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
    j["type"] = "batchnorm";
    j["dim"] = bn->dim;
    j["eps"] = bn->eps;
    j["momentum"] = bn->momentum;
  } else if (const auto* conv = std::get_if<CircularConvLayer>(&layer)) {
    j["type"] = "circular_conv";
    j["channels"] = conv->channels;
    j["height"] = conv->height;
    j["width"] = conv->width;
    j["ksize_h"] = conv->ksize_h;
    j["ksize_w"] = conv->ksize_w;
  } else if (const auto* inf = std::get_if<InflateLayer>(&layer)) {
    j["type"] = "inflate";
    j["n_add"] = inf->n_add;
    j["sigma"] = inf->sigma;
  } else if (const auto* red = std::get_if<ReduceLayer>(&layer)) {
    j["type"] = "reduce";
    j["keep"] = red->keep;
    j["sigma"] = red->sigma;
  }
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "linear") return LinearLayer{j.at("dim").get<std::size_t>()};
  if (type == "activation") {
    SmoothReluParams p;
    p.alpha = j.value("alpha", 5.8);
    p.beta = j.value("beta", 1.0);
    p.u0 = j.value("u0", 0.0);
    p.t0 = j.value("t0", 0.0);
    return ActivationLayer{p};
  }
  if (type == "batchnorm") {
    BatchNormLayer bn;
    bn.dim = j.at("dim").get<std::size_t>();
    bn.eps = j.value("eps", 1e-5);
    bn.momentum = j.value("momentum", 0.1);
    return bn;
  }
  if (type == "circular_conv") {
    CircularConvLayer conv;
    conv.channels = j.at("channels").get<std::size_t>();
    conv.height = j.at("height").get<std::size_t>();
    conv.width = j.at("width").get<std::size_t>();
    conv.ksize_h = j.at("ksize_h").get<std::size_t>();
    conv.ksize_w = j.at("ksize_w").get<std::size_t>();
    return conv;
  }
  if (type == "inflate") {
    InflateLayer inf;
    inf.n_add = j.at("n_add").get<std::size_t>();
    inf.sigma = j.value("sigma", 1.0);
    return inf;
  }
  if (type == "reduce") {
    ReduceLayer red;
    red.keep = j.at("keep").get<std::size_t>();
    red.sigma = j.value("sigma", 0.2);
    return red;
  }
  fail_validation("GeneratorNet: unknown layer type '" + type + "'");
}

}  // namespace

std::string GeneratorNet::config_json() const {
  nlohmann::json j;
  j["latent_dim"] = latent_dim_;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : layers_) j["layers"].push_back(layer_to_json(layer));
  return j.dump(2);
}

GeneratorNet GeneratorNet::from_config_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  std::vector<LayerSpec> layers;
  for (const auto& lj : j.at("layers")) layers.push_back(layer_from_json(lj));
  return GeneratorNet(j.at("latent_dim").get<std::size_t>(), std::move(layers));
}

// ---- pointwise evaluator ----

GeneratorEvaluator::GeneratorEvaluator(const GeneratorNet& net) : net_(&net) {
  const auto& store = net.params();
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& layer = net.layers()[k];
    if (std::holds_alternative<LinearLayer>(layer)) {
      const Tensor& w = store.at(GeneratorNet::param_name(k, "weight")).value;
      const Tensor& b = store.at(GeneratorNet::param_name(k, "bias")).value;
      Lu lu = Lu::compute(w);
      const double ld = lu.log_abs_det();
      frozen_.push_back(FrozenLinear{std::move(lu), b.flat(), ld});
    } else if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
      frozen_.push_back(*act);
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      FrozenBatchNorm fb;
      fb.gamma = store.at(GeneratorNet::param_name(k, "gamma")).value.flat();
      fb.beta = store.at(GeneratorNet::param_name(k, "beta")).value.flat();
      fb.mean = store.at(GeneratorNet::param_name(k, "running_mean")).value.flat();
      const auto& var = store.at(GeneratorNet::param_name(k, "running_var")).value;
      fb.inv_std.resize(bn->dim);
      fb.log_det = 0.0;
      for (std::size_t j = 0; j < bn->dim; ++j) {
        const double denom = var[j] + bn->eps;
        if (!(denom > 0.0)) fail_validation("GeneratorEvaluator: Var + eps must be positive");
        if (fb.gamma[j] == 0.0) fail_validation("GeneratorEvaluator: gamma is zero");
        fb.inv_std[j] = 1.0 / std::sqrt(denom);
        fb.log_det += std::log(std::abs(fb.gamma[j]) * fb.inv_std[j]);
      }
      frozen_.push_back(std::move(fb));
    } else if (const auto* conv = std::get_if<CircularConvLayer>(&layer)) {
      Tensor dense = circular_conv_dense_matrix(
          store.at(GeneratorNet::param_name(k, "kernel")).value, *conv);
      Lu lu = Lu::compute(dense);
      const double ld = lu.log_abs_det();
      frozen_.push_back(FrozenConv{std::move(lu), ld});
    } else if (const auto* inf = std::get_if<InflateLayer>(&layer)) {
      frozen_.push_back(*inf);
    } else if (const auto* red = std::get_if<ReduceLayer>(&layer)) {
      frozen_.push_back(*red);
    }
  }
}

double GeneratorEvaluator::log_density_at(std::span<const double> point, Rng& rng,
                                          std::size_t marginal_samples) const {
  if (point.size() != net_->output_dim()) {
    fail_validation("GeneratorEvaluator: point dimension mismatch");
  }
  return eval_from(frozen_.size(), std::vector<double>(point.begin(), point.end()), rng,
                   marginal_samples);
}

double GeneratorEvaluator::eval_from(std::size_t layer_count, std::vector<double> t, Rng& rng,
                                     std::size_t marginal_samples) const {
  if (layer_count == 0) {
    if (t.size() != net_->latent_dim()) {
      fail_numeric("GeneratorEvaluator: latent dimension mismatch during inversion");
    }
    return standard_gaussian_log_density(t);
  }
  const Frozen& layer = frozen_[layer_count - 1];

  if (const auto* lin = std::get_if<FrozenLinear>(&layer)) {
    std::vector<double> rhs(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) rhs[i] = t[i] - lin->bias[i];
    std::vector<double> u = lin->lu.solve(rhs);
    return eval_from(layer_count - 1, std::move(u), rng, marginal_samples) - lin->log_abs_det;
  }
  if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
    double ld = 0.0;
    for (double& v : t) {
      const double u = smooth_relu_invert(v, act->params);
      ld += smooth_relu_log_deriv_value(u, act->params);
      v = u;
    }
    return eval_from(layer_count - 1, std::move(t), rng, marginal_samples) - ld;
  }
  if (const auto* bn = std::get_if<FrozenBatchNorm>(&layer)) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      t[j] = (t[j] - bn->beta[j]) / (bn->gamma[j] * bn->inv_std[j]) + bn->mean[j];
    }
    return eval_from(layer_count - 1, std::move(t), rng, marginal_samples) - bn->log_det;
  }
  if (const auto* conv = std::get_if<FrozenConv>(&layer)) {
    std::vector<double> u = conv->lu.solve(t);
    return eval_from(layer_count - 1, std::move(u), rng, marginal_samples) - conv->log_abs_det;
  }
  if (const auto* inf = std::get_if<InflateLayer>(&layer)) {
    const std::size_t base = t.size() - inf->n_add;
    double noise_logd = 0.0;
    for (std::size_t j = base; j < t.size(); ++j) {
      noise_logd += gaussian_log_pdf(t[j], 0.0, inf->sigma);
    }
    t.resize(base);
    return eval_from(layer_count - 1, std::move(t), rng, marginal_samples) + noise_logd;
  }
  const auto& red = std::get<ReduceLayer>(layer);
  const std::size_t in_dim = net_->dims()[layer_count - 1];
  const std::size_t discarded = in_dim - red.keep;
  const auto pairing = reduce_pairing(red.keep, discarded);
  const std::size_t s_count = std::max<std::size_t>(1, marginal_samples);
  // Importance-sampled marginalization over the discarded block. The
  // proposal is a defensive half/half mixture of the assumed conditional and
  // a wide zero-centered Gaussian, so the estimate stays well-behaved whether
  // or not the upstream joint actually concentrates near the pairing.
  const double wide_sigma = std::max(2.5, 3.0 * red.sigma);
  constexpr double kLogHalf = -0.6931471805599453;
  std::vector<double> log_weights(s_count);
  std::vector<double> full(in_dim);
  for (std::size_t s = 0; s < s_count; ++s) {
    std::copy(t.begin(), t.end(), full.begin());
    double proposal_logd = 0.0;
    for (std::size_t j = 0; j < discarded; ++j) {
      const double mean = t[pairing[j]];
      const double draw = rng.bernoulli(0.5) ? rng.gaussian(mean, red.sigma)
                                             : rng.gaussian(0.0, wide_sigma);
      full[red.keep + j] = draw;
      const double la = gaussian_log_pdf(draw, mean, red.sigma);
      const double lb = gaussian_log_pdf(draw, 0.0, wide_sigma);
      const double hi = std::max(la, lb);
      proposal_logd += kLogHalf + hi + std::log(std::exp(la - hi) + std::exp(lb - hi));
    }
    log_weights[s] =
        eval_from(layer_count - 1, full, rng, marginal_samples) - proposal_logd;
  }
  double m = log_weights[0];
  for (double w : log_weights) m = std::max(m, w);
  double acc = 0.0;
  for (double w : log_weights) acc += std::exp(w - m);
  return m + std::log(acc / static_cast<double>(s_count));
}

}  // namespace led
