#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "bmlr/errors.hpp"
#include "bmlr/rng.hpp"

using namespace bmlr;

TEST_SUITE("rng") {

TEST_CASE("equal seeds give identical sequences") {
  RngStream a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(12345), d(12345);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.uniform() == d.uniform());
    CHECK(c.normal() == d.normal());
    CHECK(c.gamma(1.7) == d.gamma(1.7));
  }
}

TEST_CASE("different seeds diverge") {
  RngStream a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (a.next_u64() == b.next_u64());
  CHECK(same == 0);
}

TEST_CASE("substreams are deterministic and distinct") {
  RngStream root(777);
  RngStream s0 = root.substream(0);
  RngStream s1 = root.substream(1);
  RngStream s0b = RngStream(777).substream(0);
  CHECK(s0.seed() != s1.seed());
  CHECK(s0.seed() == s0b.seed());
  for (int i = 0; i < 100; ++i) CHECK(s0.next_u64() == s0b.next_u64());
  // Drawing from the parent does not perturb substream derivation.
  RngStream root2(777);
  root2.next_u64();
  CHECK(root2.substream(0).seed() == RngStream(777).substream(0).seed());
}

TEST_CASE("uniform stays strictly inside (0,1)") {
  RngStream r(9);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(lo < 1e-4);
  CHECK(hi > 1.0 - 1e-4);
}

TEST_CASE("normal moments") {
  RngStream r(42);
  const int n = 200000;
  double s = 0, s2 = 0, s3 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    s += x;
    s2 += x * x;
    s3 += x * x * x;
  }
  // 5 standard errors.
  CHECK(std::fabs(s / n) < 5.0 / std::sqrt(double(n)));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::fabs(s3 / n) < 5.0 * std::sqrt(15.0 / double(n)));
}

TEST_CASE("exponential moments") {
  RngStream r(43);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.exponential();
    CHECK(x > 0.0);
    s += x;
    s2 += x * x;
  }
  CHECK(s / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(s2 / n == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("gamma moments for shapes above and below one") {
  const int n = 400000;
  for (double shape : {0.3, 1.0, 2.5, 9.0}) {
    RngStream r(100 + static_cast<std::uint64_t>(10 * shape));
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      double x = r.gamma(shape);
      CHECK(x > 0.0);
      s += x;
      s2 += x * x;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    // mean = shape, var = shape for unit scale; 6 SE bounds
    double se_mean = std::sqrt(shape / n);
    CHECK(std::fabs(mean - shape) < 6.0 * se_mean);
    CHECK(var == doctest::Approx(shape).epsilon(0.05));
  }
  RngStream r(5);
  CHECK_THROWS_AS(r.gamma(0.0), ValidationError);
  CHECK_THROWS_AS(r.gamma(-1.0), ValidationError);
}

TEST_CASE("categorical respects weights") {
  RngStream r(7);
  std::vector<double> w = {0.2, 0.0, 0.5, 0.3};
  std::vector<int> counts(4, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[r.categorical(w.data(), 4)];
  CHECK(counts[1] == 0);
  CHECK(double(counts[0]) / n == doctest::Approx(0.2).epsilon(0.03));
  CHECK(double(counts[2]) / n == doctest::Approx(0.5).epsilon(0.03));
  CHECK(double(counts[3]) / n == doctest::Approx(0.3).epsilon(0.03));

  std::vector<double> zero = {0.0, 0.0};
  CHECK_THROWS_AS(r.categorical(zero.data(), 2), ValidationError);
  std::vector<double> neg = {0.5, -0.1};
  CHECK_THROWS_AS(r.categorical(neg.data(), 2), ValidationError);
}

}  // TEST_SUITE
