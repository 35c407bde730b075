#pragma once

#include <complex>
#include <span>
#include <vector>

#include "led/tensor.hpp"

namespace led {

// Raw dense kernels shared by the autodiff primitives and the evaluators.
// a: (m,k), b: (k,n) -> (m,n)
Tensor matmul(const Tensor& a, const Tensor& b);
// a: (m,k), b: (n,k) -> a * b^T, (m,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// a: (k,m), b: (k,n) -> a^T * b, (m,n)
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

struct SignLogDet {
  double sign;        // -1, 0 is never returned (singular throws), +1
  double log_abs_det;
};

// LU decomposition with partial pivoting. A pivot with |p| < singular_tol
// raises NumericalError: a singular map has no valid change of variable.
class Lu {
 public:
  static constexpr double kSingularTol = 1e-12;

  static Lu compute(const Tensor& a);

  double log_abs_det() const { return log_abs_det_; }
  double sign() const { return sign_; }
  SignLogDet slogdet() const { return {sign_, log_abs_det_}; }

  // Solves a x = b for one right-hand side.
  std::vector<double> solve(std::span<const double> b) const;
  Tensor solve_matrix(const Tensor& b) const;  // b: (n, m) columns of rhs
  Tensor inverse() const;

  std::size_t dim() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> lu_;       // packed row-major L\U
  std::vector<std::size_t> piv_; // row permutation
  double sign_ = 1.0;
  double log_abs_det_ = 0.0;
};

SignLogDet slogdet(const Tensor& a);
Tensor inverse(const Tensor& a);

// Thin Householder QR of a (m,n) matrix with m >= n. Used as the independent
// oracle for row-space projections and for orthogonal initialization.
struct Qr {
  Tensor q;  // (m,n), orthonormal columns
  Tensor r;  // (n,n), upper triangular

  static Qr compute(const Tensor& a);
};

// Orthogonal projector (o1,o1) onto the row space of w (o2,o1) computed via
// QR of w^T. Throws on rank-deficient w.
Tensor row_space_projector_qr(const Tensor& w);

// log|det| of a complex square matrix via complex LU; throws on singularity.
double complex_log_abs_det(std::vector<std::complex<double>>& a, std::size_t n);

// Random orthogonal matrix (|det| = 1) via QR of a Gaussian matrix with the
// R-diagonal sign fix.
class Rng;
Tensor random_orthogonal(std::size_t n, Rng& rng);

}  // namespace led
