#include "led/linalg.hpp"

#include <cmath>
#include <cstring>

#include "led/rng.hpp"

namespace led {

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows() ? b.cols() : 0;
  if (b.rows() != k) {
    fail_validation("matmul: " + a.shape_str() + " x " + b.shape_str());
  }
  Tensor c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  parallel_for(m, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      double* crow = pc + i * n;
      const double* arow = pa + i * k;
      for (std::size_t l = 0; l < k; ++l) {
        const double av = arow[l];
        if (av == 0.0) continue;
        const double* brow = pb + l * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  });
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    fail_validation("matmul_nt: " + a.shape_str() + " x " + b.shape_str() + "^T");
  }
  Tensor c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  parallel_for(m, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double* arow = pa + i * k;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = pb + j * k;
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
        crow[j] = acc;
      }
    }
  });
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) {
    fail_validation("matmul_tn: " + a.shape_str() + "^T x " + b.shape_str());
  }
  Tensor c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t l = 0; l < k; ++l) {
    const double* arow = pa + l * m;
    const double* brow = pb + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

Lu Lu::compute(const Tensor& a) {
  if (a.ndim() != 2 || a.rows() != a.cols()) {
    fail_validation("Lu: matrix must be square, got " + a.shape_str());
  }
  Lu lu;
  const std::size_t n = a.rows();
  lu.n_ = n;
  lu.lu_ = a.flat();
  lu.piv_.resize(n);
  double* m = lu.lu_.data();

  for (std::size_t col = 0; col < n; ++col) {
    // Partial pivoting: largest |value| in the column at or below diagonal.
    std::size_t pivot_row = col;
    double best = std::abs(m[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(m[r * n + col]);
      if (v > best) {
        best = v;
        pivot_row = r;
      }
    }
    if (!(best >= kSingularTol)) {
      fail_numeric("Lu: singular matrix (pivot " + std::to_string(best) + " at column " +
                   std::to_string(col) + "); change of variable is invalid");
    }
    lu.piv_[col] = pivot_row;
    if (pivot_row != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m[col * n + j], m[pivot_row * n + j]);
      lu.sign_ = -lu.sign_;
    }
    const double pivot = m[col * n + col];
    if (pivot < 0) lu.sign_ = -lu.sign_;
    lu.log_abs_det_ += std::log(std::abs(pivot));
    const double inv_pivot = 1.0 / pivot;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r * n + col] * inv_pivot;
      m[r * n + col] = f;
      if (f == 0.0) continue;
      for (std::size_t j = col + 1; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
    }
  }
  return lu;
}

std::vector<double> Lu::solve(std::span<const double> b) const {
  if (b.size() != n_) fail_validation("Lu::solve: rhs size mismatch");
  std::vector<double> x(b.begin(), b.end());
  const double* m = lu_.data();
  for (std::size_t i = 0; i < n_; ++i) {
    std::swap(x[i], x[piv_[i]]);
    for (std::size_t j = 0; j < i; ++j) x[i] -= m[i * n_ + j] * x[j];
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n_; ++j) x[ii] -= m[ii * n_ + j] * x[j];
    x[ii] /= m[ii * n_ + ii];
  }
  return x;
}

Tensor Lu::solve_matrix(const Tensor& b) const {
  if (b.rows() != n_) fail_validation("Lu::solve_matrix: shape mismatch");
  Tensor x({n_, b.cols()});
  std::vector<double> col(n_);
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < n_; ++i) col[i] = b.at(i, j);
    auto sol = solve(col);
    for (std::size_t i = 0; i < n_; ++i) x.at(i, j) = sol[i];
  }
  return x;
}

Tensor Lu::inverse() const { return solve_matrix(Tensor::identity(n_)); }

SignLogDet slogdet(const Tensor& a) { return Lu::compute(a).slogdet(); }

Tensor inverse(const Tensor& a) { return Lu::compute(a).inverse(); }

Qr Qr::compute(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  if (m < n) fail_validation("Qr: requires rows >= cols, got " + a.shape_str());
  // Householder with explicit accumulation of the thin Q.
  Tensor r = a;
  Tensor qfull = Tensor::identity(m);
  std::vector<double> v(m);
  for (std::size_t col = 0; col < n; ++col) {
    double norm = 0.0;
    for (std::size_t i = col; i < m; ++i) norm += r.at(i, col) * r.at(i, col);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = r.at(col, col) >= 0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = col; i < m; ++i) {
      v[i] = r.at(i, col) - (i == col ? alpha : 0.0);
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    // r <- (I - beta v v^T) r
    for (std::size_t j = col; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = col; i < m; ++i) dot += v[i] * r.at(i, j);
      const double f = beta * dot;
      for (std::size_t i = col; i < m; ++i) r.at(i, j) -= f * v[i];
    }
    // qfull <- qfull (I - beta v v^T)
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = col; j < m; ++j) dot += qfull.at(i, j) * v[j];
      const double f = beta * dot;
      for (std::size_t j = col; j < m; ++j) qfull.at(i, j) -= f * v[j];
    }
  }
  Qr out;
  out.q = Tensor({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.q.at(i, j) = qfull.at(i, j);
  out.r = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) out.r.at(i, j) = r.at(i, j);
  return out;
}

Tensor row_space_projector_qr(const Tensor& w) {
  const Tensor wt = transpose(w);
  const Qr qr = Qr::compute(wt);
  for (std::size_t i = 0; i < qr.r.rows(); ++i) {
    if (std::abs(qr.r.at(i, i)) < Lu::kSingularTol) {
      fail_numeric("row_space_projector: rank-deficient weight matrix");
    }
  }
  return matmul_nt(qr.q, qr.q);
}

double complex_log_abs_det(std::vector<std::complex<double>>& a, std::size_t n) {
  double log_abs = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot_row = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot_row = r;
      }
    }
    if (!(best >= Lu::kSingularTol)) {
      fail_numeric("complex_log_abs_det: singular per-frequency matrix");
    }
    if (pivot_row != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot_row * n + j]);
    }
    const std::complex<double> pivot = a[col * n + col];
    log_abs += std::log(std::abs(pivot));
    for (std::size_t r = col + 1; r < n; ++r) {
      const std::complex<double> f = a[r * n + col] / pivot;
      for (std::size_t j = col + 1; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
    }
  }
  return log_abs;
}

Tensor random_orthogonal(std::size_t n, Rng& rng) {
  Tensor g({n, n});
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.gaussian();
  const Qr qr = Qr::compute(g);
  Tensor q = qr.q;
  // Fix the signs so the factorization is unique; |det q| stays 1.
  for (std::size_t j = 0; j < n; ++j) {
    if (qr.r.at(j, j) < 0) {
      for (std::size_t i = 0; i < n; ++i) q.at(i, j) = -q.at(i, j);
    }
  }
  return q;
}

}  // namespace led
