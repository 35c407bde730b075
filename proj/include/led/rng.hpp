#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "led/common.hpp"

namespace led {

// xoshiro256** seeded through splitmix64. Self-contained so that streams are
// bit-identical across platforms and standard-library versions; checkpoint
// replay depends on that.
//
// All randomness in a run flows from one root seed via named substreams:
//   Rng root(seed); Rng data = root.fork("data"); Rng noise = root.fork("noise");
// Forking hashes the name into the parent seed without consuming parent state,
// so adding draws to one component never shifts another component's stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; one draw is cached.
  double gaussian();
  double gaussian(double mean, double stddev);

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p);

  Rng fork(std::string_view name) const;
  Rng fork(std::string_view name, std::uint64_t index) const;

  struct State {
    std::array<std::uint64_t, 4> s;
    std::uint64_t root_seed;
    bool has_cached_gaussian;
    double cached_gaussian;
  };
  State state() const;
  void set_state(const State& st);

  std::string state_hex() const;
  static State state_from_hex(const std::string& hex);

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t root_seed_ = 0;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;

  void seed_from(std::uint64_t seed);
};

}  // namespace led
