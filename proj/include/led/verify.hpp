#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "led/training.hpp"

namespace led {

// Oracle suites runnable from the CLI and reused by the test binaries. Each
// check compares an implementation path against an independent computation
// and reports its worst error.

struct VerifyCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;
  bool all_pass = true;
};

std::vector<std::string> verify_suite_names();
VerifyReport run_verify_suite(const std::string& suite, std::uint64_t seed);

// ---- reusable oracle helpers ----

// Central finite differences against reverse-mode gradients for a scalar
// graph built from the given leaves. Returns the worst relative error,
// measured as |a-n| / max(1, |a|, |n|).
using ScalarGraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;
double gradient_check(const ScalarGraphFn& fn, const std::vector<Tensor>& inputs,
                      double step = 1e-5);

// Determinant by direct permutation expansion; exponential, for n <= 8.
double brute_force_det(const Tensor& a);

// Jacobian of the generator output w.r.t. z at fixed noise, by one backward
// sweep per output component (eval mode).
Tensor generator_jacobian_at(GeneratorNet& net, const Tensor& z);

// Random dimension-preserving stack of linear/activation/batchnorm layers
// with randomized (non-trivial, non-singular) parameters.
GeneratorNet random_preserving_stack(std::size_t dim, std::size_t depth, Rng& rng);

// Worst |tracked log P - (log P(z) - log|det J|)| over n random stacks, d<=4.
double change_of_variable_worst_error(std::size_t cases, Rng& rng);

// Worst relative disagreement between the Fourier-diagonalization log|det|
// and the dense-matrix determinant over random circular convolutions.
double conv_logdet_worst_error(std::size_t cases, Rng& rng);

}  // namespace led
