#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "led/tensor.hpp"

namespace led {

struct Param {
  std::string name;
  Tensor value;
  Tensor moment1;  // Adam first moment
  Tensor moment2;  // Adam second moment
  std::uint64_t step = 0;
  bool trainable = true;
};

// Named parameter tensors with stable ordering plus per-parameter Adam state.
// Ordering is insertion order and survives save/load byte-for-byte.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor init, bool trainable = true);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t count() const { return params_.size(); }
  Param& param(std::size_t i) { return params_[i]; }
  const Param& param(std::size_t i) const { return params_[i]; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }

  // Versioned binary format, raw little-endian float64 payloads; round trips
  // bit-exactly.
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

  // FNV over the serialized bytes; used by determinism checks.
  std::uint64_t content_hash() const;

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update, in place, over the trainable parameters.
// grads must be aligned with store order (one tensor per trainable parameter,
// same shapes); a mismatch is an error.
void adam_step(ParamStore& store, const std::vector<Tensor>& grads, const AdamConfig& cfg);

}  // namespace led
