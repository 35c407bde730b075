#include "led/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>

namespace led {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) { seed_from(seed); }

void Rng::seed_from(std::uint64_t seed) {
  root_seed_ = seed;
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
  has_cached_gaussian_ = false;
  cached_gaussian_ = 0.0;
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  // u1 in (0,1]: avoids log(0).
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = r * std::sin(a);
  has_cached_gaussian_ = true;
  return r * std::cos(a);
}

double Rng::gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) fail_validation("Rng::below(0)");
  // Rejection sampling for an unbiased bounded draw.
  const std::uint64_t limit = ~0ull - (~0ull % n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Rng Rng::fork(std::string_view name) const {
  std::uint64_t h = fnv1a64(name);
  // Mix the root seed in twice through splitmix to decorrelate substreams.
  std::uint64_t x = root_seed_ ^ h;
  std::uint64_t derived = splitmix64(x);
  Rng child(derived ^ rotl(h, 17));
  return child;
}

Rng Rng::fork(std::string_view name, std::uint64_t index) const {
  return fork(std::string(name) + "/" + std::to_string(index));
}

Rng::State Rng::state() const {
  return State{s_, root_seed_, has_cached_gaussian_, cached_gaussian_};
}

void Rng::set_state(const State& st) {
  s_ = st.s;
  root_seed_ = st.root_seed;
  has_cached_gaussian_ = st.has_cached_gaussian;
  cached_gaussian_ = st.cached_gaussian;
}

std::string Rng::state_hex() const {
  char buf[2 + 6 * 17];
  std::uint64_t cg_bits;
  static_assert(sizeof(cg_bits) == sizeof(cached_gaussian_));
  std::memcpy(&cg_bits, &cached_gaussian_, sizeof(cg_bits));
  std::snprintf(buf, sizeof(buf), "%016llx:%016llx:%016llx:%016llx:%016llx:%d:%016llx",
                (unsigned long long)s_[0], (unsigned long long)s_[1],
                (unsigned long long)s_[2], (unsigned long long)s_[3],
                (unsigned long long)root_seed_, has_cached_gaussian_ ? 1 : 0,
                (unsigned long long)cg_bits);
  return std::string(buf);
}

Rng::State Rng::state_from_hex(const std::string& hex) {
  State st{};
  unsigned long long w[5], cg_bits;
  int flag = 0;
  const int got = std::sscanf(hex.c_str(), "%llx:%llx:%llx:%llx:%llx:%d:%llx", &w[0], &w[1],
                              &w[2], &w[3], &w[4], &flag, &cg_bits);
  if (got != 7) throw IoError("Rng: malformed state string");
  for (int i = 0; i < 4; ++i) st.s[i] = w[i];
  st.root_seed = w[4];
  st.has_cached_gaussian = flag != 0;
  std::memcpy(&st.cached_gaussian, &cg_bits, sizeof(double));
  return st;
}

}  // namespace led
