#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace led {

// Error taxonomy mapped to CLI exit codes: ValidationError -> 1, everything
// else that aborts a run -> 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw ValidationError(msg);
}

[[noreturn]] inline void fail_numeric(const std::string& msg) {
  throw NumericalError(msg);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Worker cap for the few embarrassingly parallel loops (matmul rows, grid
// rows). Results are bit-identical for any thread count: every output element
// is written by exactly one worker with the same sequential inner loop.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(begin, end) over a partition of [0, n). May execute inline.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace led
