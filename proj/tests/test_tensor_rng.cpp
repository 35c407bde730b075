#include <doctest.h>

#include <cmath>

#include "led/rng.hpp"
#include "led/tensor.hpp"

using namespace led;

TEST_SUITE("tensor") {
  TEST_CASE("shape and data invariants") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    t.at(1, 2) = 5.0;
    CHECK(t[5] == 5.0);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(t.reshaped({4}), ValidationError);
    CHECK(t.reshaped({3, 2}).at(2, 1) == 5.0);
  }

  TEST_CASE("check_finite names the context") {
    Tensor t({2});
    t[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK(!t.all_finite());
    CHECK_THROWS_WITH_AS(check_finite(t, "unit-test"),
                         doctest::Contains("unit-test"), NumericalError);
    t[1] = 0.0;
    CHECK_NOTHROW(check_finite(t, "unit-test"));
  }
}

TEST_SUITE("rng") {
  TEST_CASE("determinism and substream independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng root(7);
    Rng s1 = root.fork("data");
    Rng s2 = root.fork("noise");
    CHECK(s1.next_u64() != s2.next_u64());
    // Forking consumes no parent state.
    Rng r1(7), r2(7);
    (void)r1.fork("data");
    CHECK(r1.next_u64() == r2.next_u64());
  }

  TEST_CASE("gaussian moments") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gaussian();
      sum += g;
      sq += g * g;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
  }

  TEST_CASE("state round trip is exact") {
    Rng rng(99);
    rng.gaussian();  // populate the cached half
    const std::string hex = rng.state_hex();
    Rng restored(1);
    restored.set_state(Rng::state_from_hex(hex));
    for (int i = 0; i < 32; ++i) CHECK(rng.gaussian() == restored.gaussian());
  }
}
