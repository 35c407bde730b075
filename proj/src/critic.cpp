#include "led/critic.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "led/linalg.hpp"

namespace led {

CriticNet::CriticNet(std::size_t input_dim, std::vector<CriticLayerSpec> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ == 0) fail_validation("CriticNet: input dim must be positive");
  std::size_t cur = input_dim_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (const auto* lin = std::get_if<CriticLinear>(&layers_[k])) {
      if (lin->in != cur) {
        fail_validation("CriticNet: linear layer " + std::to_string(k) + " expects input " +
                        std::to_string(lin->in) + " but gets " + std::to_string(cur));
      }
      if (lin->out == 0) fail_validation("CriticNet: zero output width");
      cur = lin->out;
    }
  }
  if (cur != 1) fail_validation("CriticNet: stack must end in a scalar head");
}

std::string CriticNet::param_name(std::size_t layer, const char* field) {
  return "layer" + std::to_string(layer) + "." + field;
}

void CriticNet::init_params(Rng& rng) {
  params_ = ParamStore();
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (const auto* lin = std::get_if<CriticLinear>(&layers_[k])) {
      Tensor w({lin->out, lin->in});
      const double std_dev = std::sqrt(2.0 / static_cast<double>(lin->in + lin->out));
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = std_dev * rng.gaussian();
      params_.add(param_name(k, "weight"), std::move(w));
      params_.add(param_name(k, "bias"), Tensor::zeros({lin->out}));
    }
  }
}

Var perpendicular_rows(const Var& x, const Var& w) {
  const std::size_t o1 = x->value.cols();
  if (w->value.ndim() != 2 || w->value.cols() != o1) {
    fail_validation("perpendicular_rows: weight shape mismatch");
  }
  // P = w^T (w w^T)^-1 w projects onto the row space; matinv throws when
  // w w^T is singular, i.e. w is rank-deficient.
  Var gram = matmul_nt(w, w);
  Var proj = matmul(matmul(transpose(w), matinv(gram)), w);
  return sub(x, matmul(x, proj));
}

Var perpendicular_rows_literal(const Var& x, const Var& w) {
  // u_raw = w^T w x per row; remove the component along u = u_raw/|u_raw|.
  Var u_raw = matmul(matmul_nt(x, w), w);
  Var norms = l2norm_rows(u_raw);
  Var dots = sum_rows(mul(x, u_raw));
  Var inv_norm_sq = vexp(scale(vlog(norms), -2.0));
  Var coef = mul(dots, inv_norm_sq);
  return sub(x, mul_col(u_raw, coef));
}

Tensor perpendicular_component(const Tensor& w, const Tensor& x) {
  if (x.ndim() != 1 || w.ndim() != 2 || w.cols() != x.size()) {
    fail_validation("perpendicular_component: expects w (o2,o1) and x (o1)");
  }
  Tape tape;
  Var xv = tape.constant(x.reshaped({1, x.size()}));
  Var wv = tape.constant(w);
  Var perp = perpendicular_rows(xv, wv);
  return perp->value.reshaped({x.size()});
}

Var critic_log_density(const CriticNet& net, const BoundParams& bound,
                       const Var& x) {
  if (x->value.ndim() != 2 || x->value.cols() != net.input_dim()) {
    fail_validation("critic_log_density: input must be (B, " +
                    std::to_string(net.input_dim()) + ")");
  }
  Var cur = x;
  Var penalty;  // (B), accumulated across contracting linear layers
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& layer = net.layers()[k];
    if (const auto* lin = std::get_if<CriticLinear>(&layer)) {
      const Var& w = bound.at(CriticNet::param_name(k, "weight"));
      const Var& b = bound.at(CriticNet::param_name(k, "bias"));
      if (net.penalty_enabled && lin->out < lin->in) {
        Var perp = net.literal_penalty ? perpendicular_rows_literal(cur, w)
                                       : perpendicular_rows(cur, w);
        Var norm = l2norm_rows(perp);
        penalty = penalty ? add(penalty, norm) : norm;
      }
      cur = add_row(matmul_nt(cur, w), b);
    } else if (const auto* act = std::get_if<CriticActivation>(&layer)) {
      cur = smooth_relu(cur, act->params);
    }
  }
  Var s = reshape(cur, {cur->value.rows()});
  Var out = net.output_scale == 1.0 ? s : scale(s, net.output_scale);
  if (penalty) out = sub(out, penalty);
  return out;
}

Tensor critic_log_density_batch(const CriticNet& net, const Tensor& x) {
  Tape tape;
  BoundParams bound = bind_params(tape, net.params(), false);
  Var out = critic_log_density(net, bound, tape.constant(x));
  return out->value;
}

double critic_log_density_point(const CriticNet& net, std::span<const double> x) {
  Tensor row({1, x.size()});
  std::copy(x.begin(), x.end(), row.data());
  return critic_log_density_batch(net, row)[0];
}

AlphaEstimate alpha_from_log_weights(const Tensor& log_n, const Tensor& log_q) {
  const std::size_t n = log_n.size();
  if (n == 0) fail_validation("alpha: needs at least one sample");
  if (log_q.size() != n) fail_validation("alpha: misaligned sample vectors");
  // Work in a max-shifted scale so exp never overflows.
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(n);
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = log_n[i] - log_q[i];
    m = std::max(m, lw[i]);
  }
  double acc = 0.0;
  for (double v : lw) acc += std::exp(v - m);
  const double log_mean = m + std::log(acc / static_cast<double>(n));

  AlphaEstimate est;
  est.n_samples = n;
  est.log_mean = log_mean;
  est.mean = std::exp(log_mean);
  if (n > 1) {
    // Sample std in the same shifted scale, rescaled back.
    const double mean_shifted = acc / static_cast<double>(n);
    double ss = 0.0;
    for (double v : lw) {
      const double dev = std::exp(v - m) - mean_shifted;
      ss += dev * dev;
    }
    est.stddev = std::exp(m) * std::sqrt(ss / static_cast<double>(n - 1));
  }
  return est;
}

AlphaEstimate estimate_alpha_with(const CriticFn& critic_fn, GeneratorNet& gen,
                                  const SamplingPolicy& policy, std::size_t n, Rng& rng,
                                  const AlphaOptions& opts) {
  if (n == 0) fail_validation("estimate_alpha: n must be >= 1");
  MixtureSamples samples = draw_mixture_samples(gen, policy, n, rng, NetMode::kEval);
  if (opts.exact_divisor) {
    GeneratorEvaluator evaluator(gen);
    const std::size_t d = gen.output_dim();
    const double p = policy.replace_prob;
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> row{samples.values.data() + i * d, d};
      const double log_gen =
          p >= 1.0 ? 0.0 : evaluator.log_density_at(row, rng, opts.marginal_samples);
      samples.log_q[i] =
          mixture_log_density_value(log_gen, standard_gaussian_log_density(row), p);
    }
  }
  Tensor log_n = critic_fn(samples.values);
  return alpha_from_log_weights(log_n, samples.log_q);
}

AlphaEstimate estimate_alpha(const CriticNet& critic, GeneratorNet& gen,
                             const SamplingPolicy& policy, std::size_t n, Rng& rng,
                             const AlphaOptions& opts) {
  return estimate_alpha_with(
      [&critic](const Tensor& values) { return critic_log_density_batch(critic, values); },
      gen, policy, n, rng, opts);
}

double log_p_theta(const CriticNet& net, const AlphaEstimate& alpha,
                   std::span<const double> x) {
  if (!(alpha.mean > 0.0)) fail_validation("log_p_theta: alpha must be positive");
  return critic_log_density_point(net, x) - alpha.log_mean;
}

// ---- config ----

std::string CriticNet::config_json() const {
  nlohmann::json j;
  j["input_dim"] = input_dim_;
  j["penalty"] = penalty_enabled;
  j["literal_penalty"] = literal_penalty;
  j["output_scale"] = output_scale;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : layers_) {
    nlohmann::json lj;
    if (const auto* lin = std::get_if<CriticLinear>(&layer)) {
      lj["type"] = "linear";
      lj["in"] = lin->in;
      lj["out"] = lin->out;
    } else if (const auto* act = std::get_if<CriticActivation>(&layer)) {
      lj["type"] = "activation";
      lj["alpha"] = act->params.alpha;
      lj["beta"] = act->params.beta;
      lj["u0"] = act->params.u0;
      lj["t0"] = act->params.t0;
    }
    j["layers"].push_back(lj);
  }
  return j.dump(2);
}

CriticNet CriticNet::from_config_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  std::vector<CriticLayerSpec> layers;
  for (const auto& lj : j.at("layers")) {
    const std::string type = lj.at("type").get<std::string>();
    if (type == "linear") {
      layers.push_back(
          CriticLinear{lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>()});
    } else if (type == "activation") {
      SmoothReluParams p;
      p.alpha = lj.value("alpha", 5.8);
      p.beta = lj.value("beta", 1.0);
      p.u0 = lj.value("u0", 0.0);
      p.t0 = lj.value("t0", 0.0);
      layers.push_back(CriticActivation{p});
    } else {
      fail_validation("CriticNet: unknown layer type '" + type + "'");
    }
  }
  CriticNet net(j.at("input_dim").get<std::size_t>(), std::move(layers));
  net.penalty_enabled = j.value("penalty", true);
  net.literal_penalty = j.value("literal_penalty", false);
  net.output_scale = j.value("output_scale", 1.0);
  return net;
}

}  // namespace led
