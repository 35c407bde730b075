#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "led/common.hpp"

namespace led {

// Dense row-major array of doubles. Everything in this codebase (values,
// parameters, gradients) is carried by this one type; 64-bit floats are used
// throughout because log-determinant and log-sum-exp arithmetic is
// precision-sensitive and the networks are small.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool is_scalar() const { return size() == 1; }
  double as_scalar() const;

  // 2-D accessors; valid only for matrices.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& flat() { return data_; }
  const std::vector<double>& flat() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  void fill(double v);
  void zero() { fill(0.0); }

  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::size_t cols_ = 0;  // cached for 2-D indexing
  std::vector<double> data_;

  void init_cols();
};

// Dedicated NaN/Inf check; throws NumericalError naming the offending context.
void check_finite(const Tensor& t, std::string_view context);

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace led
