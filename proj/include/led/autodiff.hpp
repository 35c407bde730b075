#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "led/tensor.hpp"

namespace led {

class Tape;
struct Node;
using Var = std::shared_ptr<Node>;

// One value in a define-by-run graph. Values are computed eagerly as ops are
// called; creation order on the tape is therefore a topological order, and
// backward is a single reverse sweep.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first contribution
  bool requires_grad = false;
  bool is_leaf = true;
  bool grad_touched = false;
  const char* op = "leaf";
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  Tape* tape = nullptr;
  std::size_t index = 0;

  void accumulate_grad(const Tensor& g);
  // Adds g scaled into grad without a temporary.
  void accumulate_grad_scaled(const Tensor& g, double scale);
  double scalar() const { return value.as_scalar(); }
};

// Owns every node of one graph. A tape is confined to one thread; independent
// tapes may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  Var make(const char* op, Tensor value, std::vector<Var> parents,
           std::function<void(Node&)> backward_fn);

  // Reverse accumulation from a scalar root. Leaf gradients accumulate across
  // calls; intermediate gradients are reset per call.
  void backward(const Var& root);

  // When enabled, every op's output is checked and a NumericalError names the
  // producing op. Off by default; training turns it on.
  void set_check_values(bool enabled) { check_values_ = enabled; }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Var> nodes_;
  bool check_values_ = false;
};

// ---- primitives ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);

Var matmul(const Var& a, const Var& b);
// a (m,k) times b^T with b (n,k); the layout used by linear layers.
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);

Var vexp(const Var& a);
Var vlog(const Var& a);

Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var sum_rows(const Var& a);   // (B,D) -> (B)
Var max_rows(const Var& a);   // (B,D) -> (B), subgradient to first argmax
Var max_all(const Var& a);    // any -> scalar

Var add_row(const Var& a, const Var& v);  // (B,D) + (D)
Var mul_row(const Var& a, const Var& v);  // (B,D) * (D)
Var add_col(const Var& a, const Var& u);  // (B,D) + (B) broadcast across cols
Var mul_col(const Var& a, const Var& u);  // (B,D) * (B) broadcast across cols
Var add_broadcast(const Var& a, const Var& s);  // any + scalar var

Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);
Var gather_cols(const Var& a, std::vector<std::size_t> idx);
Var reshape(const Var& a, std::vector<std::size_t> shape);

// log|det| of a square matrix via LU with partial pivoting; singular input
// (any |pivot| < 1e-12) is an error rather than -inf.
Var logdet(const Var& a);
Var matinv(const Var& a);

Var l2norm_rows(const Var& a);  // (B,D) -> (B)

// The piecewise-soft activation L(u) = log(exp(a(u-u0)) + exp(b(u-u0)))/a - t0
// and the log of its derivative; both overflow-safe.
struct SmoothReluParams {
  double alpha = 5.8;
  double beta = 1.0;
  double u0 = 0.0;
  double t0 = 0.0;
};
Var smooth_relu(const Var& a, const SmoothReluParams& p);
Var smooth_relu_log_deriv(const Var& a, const SmoothReluParams& p);

// Scalar kernels shared with the raw evaluators.
double smooth_relu_value(double u, const SmoothReluParams& p);
double smooth_relu_deriv(double u, const SmoothReluParams& p);
double smooth_relu_log_deriv_value(double u, const SmoothReluParams& p);
double smooth_relu_invert(double t, const SmoothReluParams& p);

// Scatters a (C,C,kh,kw) kernel into the dense matrix of the circular
// convolution on a HxW grid, so conv layers stay differentiable.
Var circulant_embed(const Var& kernel, std::size_t channels, std::size_t height,
                    std::size_t width);

// ---- composites (built from primitives) ----
Var logsumexp_rows(const Var& a);           // (B,D) -> (B)
Var logsumexp_all(const Var& a);            // any -> scalar
Var log_mean_exp_all(const Var& a);         // logsumexp - log n

}  // namespace led
