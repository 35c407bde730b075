#include "led/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "led/linalg.hpp"

namespace led {

void Node::accumulate_grad(const Tensor& g) {
  if (!g.same_shape(value)) {
    fail_validation(std::string("gradient shape mismatch at op ") + op + ": " + g.shape_str() +
                    " vs " + value.shape_str());
  }
  if (grad.empty()) grad = Tensor::zeros(value.shape());
  double* dst = grad.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
  grad_touched = true;
}

void Node::accumulate_grad_scaled(const Tensor& g, double s) {
  if (grad.empty()) grad = Tensor::zeros(value.shape());
  double* dst = grad.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += s * src[i];
  grad_touched = true;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->is_leaf = true;
  n->tape = this;
  n->index = nodes_.size();
  nodes_.push_back(n);
  return n;
}

Var Tape::make(const char* op, Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backward_fn) {
  if (check_values_) check_finite(value, op);
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->is_leaf = false;
  n->op = op;
  n->tape = this;
  bool rg = false;
  for (const auto& p : parents) {
    if (p->tape != this) fail_validation(std::string("op ") + op + ": mixed tapes");
    rg = rg || p->requires_grad;
  }
  n->requires_grad = rg;
  n->parents = std::move(parents);
  if (rg) n->backward_fn = std::move(backward_fn);
  n->index = nodes_.size();
  nodes_.push_back(n);
  return n;
}

void Tape::backward(const Var& root) {
  if (!root || root->tape != this) fail_validation("backward: root not on this tape");
  if (root->value.size() != 1) {
    fail_validation("backward: root must be scalar, got shape " + root->value.shape_str());
  }
  for (std::size_t i = 0; i <= root->index; ++i) {
    Node& n = *nodes_[i];
    n.grad_touched = false;
    if (!n.is_leaf && !n.grad.empty()) n.grad.zero();
  }
  root->accumulate_grad(Tensor::scalar(1.0));
  for (std::size_t i = root->index + 1; i-- > 0;) {
    Node& n = *nodes_[i];
    if (n.grad_touched && n.requires_grad && n.backward_fn) n.backward_fn(n);
  }
}

namespace {

Tape* tape_of(const Var& a) { return a->tape; }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->value.same_shape(b->value)) {
    fail_validation(std::string(op) + ": shape mismatch " + a->value.shape_str() + " vs " +
                    b->value.shape_str());
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a->value;
  const double* pb = b->value.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += pb[i];
  Node* pa = a.get();
  Node* pbn = b.get();
  return tape_of(a)->make("add", std::move(out), {a, b}, [pa, pbn](Node& n) {
    if (pa->requires_grad) pa->accumulate_grad(n.grad);
    if (pbn->requires_grad) pbn->accumulate_grad(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a->value;
  const double* pb = b->value.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= pb[i];
  Node* pa = a.get();
  Node* pbn = b.get();
  return tape_of(a)->make("sub", std::move(out), {a, b}, [pa, pbn](Node& n) {
    if (pa->requires_grad) pa->accumulate_grad(n.grad);
    if (pbn->requires_grad) pbn->accumulate_grad_scaled(n.grad, -1.0);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a->value;
  const double* pb = b->value.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= pb[i];
  Node* pa = a.get();
  Node* pbn = b.get();
  return tape_of(a)->make("mul", std::move(out), {a, b}, [pa, pbn](Node& n) {
    if (pa->requires_grad) {
      Tensor g = n.grad;
      const double* q = pbn->value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= q[i];
      pa->accumulate_grad(g);
    }
    if (pbn->requires_grad) {
      Tensor g = n.grad;
      const double* q = pa->value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= q[i];
      pbn->accumulate_grad(g);
    }
  });
}

Var scale(const Var& a, double c) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  Node* pa = a.get();
  return tape_of(a)->make("scale", std::move(out), {a}, [pa, c](Node& n) {
    pa->accumulate_grad_scaled(n.grad, c);
  });
}

Var add_const(const Var& a, double c) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
  Node* pa = a.get();
  return tape_of(a)->make("add_const", std::move(out), {a}, [pa](Node& n) {
    pa->accumulate_grad(n.grad);
  });
}

Var matmul(const Var& a, const Var& b) {
  Tensor out = matmul(a->value, b->value);
  Node* pa = a.get();
  Node* pbn = b.get();
  return tape_of(a)->make("matmul", std::move(out), {a, b}, [pa, pbn](Node& n) {
    if (pa->requires_grad) pa->accumulate_grad(matmul_nt(n.grad, pbn->value));
    if (pbn->requires_grad) pbn->accumulate_grad(matmul_tn(pa->value, n.grad));
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  Tensor out = matmul_nt(a->value, b->value);
  Node* pa = a.get();
  Node* pbn = b.get();
  return tape_of(a)->make("matmul_nt", std::move(out), {a, b}, [pa, pbn](Node& n) {
    if (pa->requires_grad) pa->accumulate_grad(matmul(n.grad, pbn->value));
    if (pbn->requires_grad) pbn->accumulate_grad(matmul_tn(n.grad, pa->value));
  });
}

Var transpose(const Var& a) {
  Tensor out = transpose(a->value);
  Node* pa = a.get();
  return tape_of(a)->make("transpose", std::move(out), {a}, [pa](Node& n) {
    pa->accumulate_grad(transpose(n.grad));
  });
}

Var vexp(const Var& a) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
  Node* pa = a.get();
  return tape_of(a)->make("exp", std::move(out), {a}, [pa](Node& n) {
    Tensor g = n.grad;
    const double* v = n.value.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= v[i];
    pa->accumulate_grad(g);
  });
}

Var vlog(const Var& a) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] <= 0.0) fail_numeric("log: non-positive input " + std::to_string(out[i]));
    out[i] = std::log(out[i]);
  }
  Node* pa = a.get();
  return tape_of(a)->make("log", std::move(out), {a}, [pa](Node& n) {
    Tensor g = n.grad;
    const double* v = pa->value.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] /= v[i];
    pa->accumulate_grad(g);
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) s += a->value[i];
  Node* pa = a.get();
  return tape_of(a)->make("sum", Tensor::scalar(s), {a}, [pa](Node& n) {
    pa->accumulate_grad(Tensor::full(pa->value.shape(), n.grad[0]));
  });
}

Var mean_all(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) s += a->value[i];
  Node* pa = a.get();
  return tape_of(a)->make("mean", Tensor::scalar(s * inv), {a}, [pa, inv](Node& n) {
    pa->accumulate_grad(Tensor::full(pa->value.shape(), n.grad[0] * inv));
  });
}

Var sum_rows(const Var& a) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  Tensor out({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += a->value.at(i, j);
    out[i] = s;
  }
  Node* pa = a.get();
  return tape_of(a)->make("sum_rows", std::move(out), {a}, [pa, rows, cols](Node& n) {
    Tensor g({rows, cols});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) g.at(i, j) = n.grad[i];
    pa->accumulate_grad(g);
  });
}

Var max_rows(const Var& a) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  Tensor out({rows});
  auto argmax = std::make_shared<std::vector<std::size_t>>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j) {
      if (a->value.at(i, j) > a->value.at(i, best)) best = j;
    }
    (*argmax)[i] = best;
    out[i] = a->value.at(i, best);
  }
  Node* pa = a.get();
  return tape_of(a)->make("max_rows", std::move(out), {a}, [pa, argmax, rows, cols](Node& n) {
    Tensor g({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) g.at(i, (*argmax)[i]) = n.grad[i];
    pa->accumulate_grad(g);
  });
}

Var max_all(const Var& a) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < a->value.size(); ++i) {
    if (a->value[i] > a->value[best]) best = i;
  }
  Node* pa = a.get();
  return tape_of(a)->make("max", Tensor::scalar(a->value[best]), {a}, [pa, best](Node& n) {
    Tensor g = Tensor::zeros(pa->value.shape());
    g[best] = n.grad[0];
    pa->accumulate_grad(g);
  });
}

Var add_row(const Var& a, const Var& v) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  if (v->value.size() != cols) fail_validation("add_row: width mismatch");
  Tensor out = a->value;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) += v->value[j];
  Node* pa = a.get();
  Node* pv = v.get();
  return tape_of(a)->make("add_row", std::move(out), {a, v}, [pa, pv, rows, cols](Node& n) {
    if (pa->requires_grad) pa->accumulate_grad(n.grad);
    if (pv->requires_grad) {
      Tensor g(pv->value.shape());
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g[j] += n.grad.at(i, j);
      pv->accumulate_grad(g);
    }
  });
}

Var mul_row(const Var& a, const Var& v) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  if (v->value.size() != cols) fail_validation("mul_row: width mismatch");
  Tensor out = a->value;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) *= v->value[j];
  Node* pa = a.get();
  Node* pv = v.get();
  return tape_of(a)->make("mul_row", std::move(out), {a, v}, [pa, pv, rows, cols](Node& n) {
    if (pa->requires_grad) {
      Tensor g = n.grad;
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g.at(i, j) *= pv->value[j];
      pa->accumulate_grad(g);
    }
    if (pv->requires_grad) {
      Tensor g(pv->value.shape());
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g[j] += n.grad.at(i, j) * pa->value.at(i, j);
      pv->accumulate_grad(g);
    }
  });
}

Var add_col(const Var& a, const Var& u) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  if (u->value.size() != rows) fail_validation("add_col: height mismatch");
  Tensor out = a->value;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) += u->value[i];
  Node* pa = a.get();
  Node* pu = u.get();
  return tape_of(a)->make("add_col", std::move(out), {a, u}, [pa, pu, rows, cols](Node& n) {
    if (pa->requires_grad) pa->accumulate_grad(n.grad);
    if (pu->requires_grad) {
      Tensor g(pu->value.shape());
      for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += n.grad.at(i, j);
        g[i] = s;
      }
      pu->accumulate_grad(g);
    }
  });
}

Var mul_col(const Var& a, const Var& u) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  if (u->value.size() != rows) fail_validation("mul_col: height mismatch");
  Tensor out = a->value;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) *= u->value[i];
  Node* pa = a.get();
  Node* pu = u.get();
  return tape_of(a)->make("mul_col", std::move(out), {a, u}, [pa, pu, rows, cols](Node& n) {
    if (pa->requires_grad) {
      Tensor g = n.grad;
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g.at(i, j) *= pu->value[i];
      pa->accumulate_grad(g);
    }
    if (pu->requires_grad) {
      Tensor g(pu->value.shape());
      for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += n.grad.at(i, j) * pa->value.at(i, j);
        g[i] = s;
      }
      pu->accumulate_grad(g);
    }
  });
}

Var add_broadcast(const Var& a, const Var& s) {
  if (s->value.size() != 1) fail_validation("add_broadcast: addend must be scalar");
  Tensor out = a->value;
  const double sv = s->value[0];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sv;
  Node* pa = a.get();
  Node* ps = s.get();
  return tape_of(a)->make("add_broadcast", std::move(out), {a, s}, [pa, ps](Node& n) {
    if (pa->requires_grad) pa->accumulate_grad(n.grad);
    if (ps->requires_grad) {
      double total = 0.0;
      for (std::size_t i = 0; i < n.grad.size(); ++i) total += n.grad[i];
      ps->accumulate_grad(Tensor::scalar(total));
    }
  });
}

Var concat_cols(const Var& a, const Var& b) {
  const std::size_t rows = a->value.rows(), ca = a->value.cols(), cb = b->value.cols();
  if (b->value.rows() != rows) fail_validation("concat_cols: row mismatch");
  Tensor out({rows, ca + cb});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = a->value.at(i, j);
    for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = b->value.at(i, j);
  }
  Node* pa = a.get();
  Node* pb = b.get();
  return tape_of(a)->make("concat_cols", std::move(out), {a, b},
                          [pa, pb, rows, ca, cb](Node& n) {
    if (pa->requires_grad) {
      Tensor g({rows, ca});
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < ca; ++j) g.at(i, j) = n.grad.at(i, j);
      pa->accumulate_grad(g);
    }
    if (pb->requires_grad) {
      Tensor g({rows, cb});
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cb; ++j) g.at(i, j) = n.grad.at(i, ca + j);
      pb->accumulate_grad(g);
    }
  });
}

Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  if (c0 >= c1 || c1 > cols) fail_validation("slice_cols: bad range");
  Tensor out({rows, c1 - c0});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = a->value.at(i, j);
  Node* pa = a.get();
  return tape_of(a)->make("slice_cols", std::move(out), {a}, [pa, rows, cols, c0, c1](Node& n) {
    Tensor g({rows, cols});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = c0; j < c1; ++j) g.at(i, j) = n.grad.at(i, j - c0);
    pa->accumulate_grad(g);
  });
}

Var gather_cols(const Var& a, std::vector<std::size_t> idx) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  for (std::size_t j : idx) {
    if (j >= cols) fail_validation("gather_cols: index out of range");
  }
  Tensor out({rows, idx.size()});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out.at(i, j) = a->value.at(i, idx[j]);
  Node* pa = a.get();
  auto indices = std::make_shared<std::vector<std::size_t>>(std::move(idx));
  return tape_of(a)->make("gather_cols", std::move(out), {a},
                          [pa, indices, rows, cols](Node& n) {
    Tensor g({rows, cols});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < indices->size(); ++j)
        g.at(i, (*indices)[j]) += n.grad.at(i, j);
    pa->accumulate_grad(g);
  });
}

Var reshape(const Var& a, std::vector<std::size_t> shape) {
  Tensor out = a->value.reshaped(shape);
  Node* pa = a.get();
  return tape_of(a)->make("reshape", std::move(out), {a}, [pa](Node& n) {
    pa->accumulate_grad(n.grad.reshaped(pa->value.shape()));
  });
}

Var logdet(const Var& a) {
  auto lu = std::make_shared<Lu>(Lu::compute(a->value));
  Node* pa = a.get();
  return tape_of(a)->make("logdet", Tensor::scalar(lu->log_abs_det()), {a}, [pa, lu](Node& n) {
    // d log|det A| / dA = (A^-1)^T
    Tensor inv_t = transpose(lu->inverse());
    pa->accumulate_grad_scaled(inv_t, n.grad[0]);
  });
}

Var matinv(const Var& a) {
  Tensor inv = inverse(a->value);
  Node* pa = a.get();
  return tape_of(a)->make("matinv", std::move(inv), {a}, [pa](Node& n) {
    // dA = -V^T g V^T with V = A^-1
    Tensor vt = transpose(n.value);
    Tensor g = matmul(matmul(vt, n.grad), vt);
    pa->accumulate_grad_scaled(g, -1.0);
  });
}

Var l2norm_rows(const Var& a) {
  const std::size_t rows = a->value.rows(), cols = a->value.cols();
  Tensor out({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += a->value.at(i, j) * a->value.at(i, j);
    out[i] = std::sqrt(s);
  }
  Node* pa = a.get();
  return tape_of(a)->make("l2norm_rows", std::move(out), {a}, [pa, rows, cols](Node& n) {
    Tensor g({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
      const double norm = n.value[i];
      if (norm == 0.0) continue;  // subgradient 0 at the origin
      const double f = n.grad[i] / norm;
      for (std::size_t j = 0; j < cols; ++j) g.at(i, j) = f * pa->value.at(i, j);
    }
    pa->accumulate_grad(g);
  });
}

double smooth_relu_value(double u, const SmoothReluParams& p) {
  const double a = p.alpha * (u - p.u0);
  const double b = p.beta * (u - p.u0);
  const double m = std::max(a, b);
  return (m + std::log(std::exp(a - m) + std::exp(b - m))) / p.alpha - p.t0;
}

double smooth_relu_deriv(double u, const SmoothReluParams& p) {
  const double a = p.alpha * (u - p.u0);
  const double b = p.beta * (u - p.u0);
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  return (ea + (p.beta / p.alpha) * eb) / (ea + eb);
}

double smooth_relu_log_deriv_value(double u, const SmoothReluParams& p) {
  const double a = p.alpha * (u - p.u0);
  const double b = p.beta * (u - p.u0);
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  return std::log(ea + (p.beta / p.alpha) * eb) - std::log(ea + eb);
}

namespace {

// d/du log L'(u) = T'/T - S'/S with T = e^a + (b/a) e^b, S = e^a + e^b.
double smooth_relu_log_deriv_slope(double u, const SmoothReluParams& p) {
  const double a = p.alpha * (u - p.u0);
  const double b = p.beta * (u - p.u0);
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  const double t = ea + (p.beta / p.alpha) * eb;
  const double tp = p.alpha * ea + (p.beta * p.beta / p.alpha) * eb;
  const double s = ea + eb;
  const double sp = p.alpha * ea + p.beta * eb;
  return tp / t - sp / s;
}

}  // namespace

double smooth_relu_invert(double t, const SmoothReluParams& p) {
  if (!(p.alpha > p.beta && p.beta > 0)) fail_validation("smooth_relu: requires alpha > beta > 0");
  // Initial guess from the two asymptotic linear regimes.
  double u = (t + p.t0) > 0 ? (t + p.t0 + p.u0) : (p.u0 + (p.alpha / p.beta) * (t + p.t0));
  double lo = u - 1.0, hi = u + 1.0;
  while (smooth_relu_value(lo, p) > t) lo -= std::max(1.0, hi - lo);
  while (smooth_relu_value(hi, p) < t) hi += std::max(1.0, hi - lo);
  for (int it = 0; it < 200; ++it) {
    const double f = smooth_relu_value(u, p) - t;
    if (std::abs(f) <= 1e-14 * std::max(1.0, std::abs(t))) return u;
    if (f > 0) hi = u; else lo = u;
    const double step = f / smooth_relu_deriv(u, p);
    double next = u - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
  }
  return u;
}

Var smooth_relu(const Var& a, const SmoothReluParams& p) {
  if (!(p.alpha > p.beta && p.beta > 0)) fail_validation("smooth_relu: requires alpha > beta > 0");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = smooth_relu_value(out[i], p);
  Node* pa = a.get();
  return tape_of(a)->make("smooth_relu", std::move(out), {a}, [pa, p](Node& n) {
    Tensor g = n.grad;
    const double* u = pa->value.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= smooth_relu_deriv(u[i], p);
    pa->accumulate_grad(g);
  });
}

Var smooth_relu_log_deriv(const Var& a, const SmoothReluParams& p) {
  if (!(p.alpha > p.beta && p.beta > 0)) fail_validation("smooth_relu: requires alpha > beta > 0");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = smooth_relu_log_deriv_value(out[i], p);
  Node* pa = a.get();
  return tape_of(a)->make("smooth_relu_log_deriv", std::move(out), {a}, [pa, p](Node& n) {
    Tensor g = n.grad;
    const double* u = pa->value.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= smooth_relu_log_deriv_slope(u[i], p);
    pa->accumulate_grad(g);
  });
}

Var circulant_embed(const Var& kernel, std::size_t channels, std::size_t height,
                    std::size_t width) {
  const auto& ks = kernel->value.shape();
  if (ks.size() != 4 || ks[0] != channels || ks[1] != channels) {
    fail_validation("circulant_embed: kernel must be (C,C,kh,kw)");
  }
  const std::size_t kh = ks[2], kw = ks[3];
  const std::size_t dim = channels * height * width;
  // Flat index map: pairs of (dense position, kernel position).
  auto pairs = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>();
  pairs->reserve(dim * channels * kh * kw);
  Tensor dense({dim, dim});
  for (std::size_t o = 0; o < channels; ++o) {
    for (std::size_t i = 0; i < channels; ++i) {
      for (std::size_t a = 0; a < kh; ++a) {
        for (std::size_t b = 0; b < kw; ++b) {
          const std::size_t kidx = ((o * channels + i) * kh + a) * kw + b;
          const double kval = kernel->value[kidx];
          for (std::size_t x = 0; x < height; ++x) {
            for (std::size_t y = 0; y < width; ++y) {
              const std::size_t row = (o * height + x) * width + y;
              const std::size_t col = (i * height + (x + a) % height) * width + (y + b) % width;
              dense.at(row, col) += kval;
              pairs->emplace_back(row * dim + col, kidx);
            }
          }
        }
      }
    }
  }
  Node* pk = kernel.get();
  return tape_of(kernel)->make("circulant_embed", std::move(dense), {kernel},
                               [pk, pairs](Node& n) {
    Tensor g = Tensor::zeros(pk->value.shape());
    for (const auto& [dense_idx, kidx] : *pairs) g[kidx] += n.grad[dense_idx];
    pk->accumulate_grad(g);
  });
}

Var logsumexp_rows(const Var& a) {
  Var m = max_rows(a);
  Var shifted = add_col(a, scale(m, -1.0));
  Var s = sum_rows(vexp(shifted));
  return add(vlog(s), m);
}

Var logsumexp_all(const Var& a) {
  Var m = max_all(a);
  Var shifted = add_broadcast(a, scale(m, -1.0));
  Var s = sum_all(vexp(shifted));
  return add(vlog(s), m);
}

Var log_mean_exp_all(const Var& a) {
  return add_const(logsumexp_all(a), -std::log(static_cast<double>(a->value.size())));
}

}  // namespace led
