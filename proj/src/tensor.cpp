#include "led/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace led {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
  for (std::size_t d : shape_) {
    if (d == 0) fail_validation("Tensor: zero-sized dimension");
  }
  init_cols();
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    fail_validation("Tensor: shape " + shape_str() + " does not match data length " +
                    std::to_string(data_.size()));
  }
  init_cols();
}

void Tensor::init_cols() { cols_ = shape_.size() == 2 ? shape_[1] : 0; }

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double Tensor::as_scalar() const {
  if (size() != 1) fail_validation("Tensor: as_scalar on shape " + shape_str());
  return data_[0];
}

std::size_t Tensor::rows() const {
  if (ndim() != 2) fail_validation("Tensor: rows() on shape " + shape_str());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (ndim() != 2) fail_validation("Tensor: cols() on shape " + shape_str());
  return shape_[1];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ',';
    os << shape_[i];
  }
  os << ')';
  return os.str();
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  if (shape_product(new_shape) != size()) {
    fail_validation("Tensor: reshape " + shape_str() + " to incompatible shape");
  }
  return Tensor(std::move(new_shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void check_finite(const Tensor& t, std::string_view context) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      fail_numeric("non-finite value (" + std::to_string(t[i]) + ") at flat index " +
                   std::to_string(i) + " in " + std::string(context));
    }
  }
}

}  // namespace led
