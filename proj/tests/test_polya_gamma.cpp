#include <doctest.h>

#include <cmath>
#include <vector>

#include "bmlr/errors.hpp"
#include "bmlr/polya_gamma.hpp"
#include "bmlr/rng.hpp"

using namespace bmlr;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent oracle: PG(1,z) is an infinite sum of exponentials scaled by
// 1/(2 pi^2 ((k-1/2)^2 + c^2)), c = z/(2 pi). Mean and variance follow by
// termwise expectation; tails are closed with a midpoint-rule integral.
double series_mean(double z) {
  double c = std::fabs(z) / (2.0 * kPi);
  const int kTerms = 200000;
  double s = 0.0;
  for (int k = kTerms; k >= 1; --k) {
    double m = k - 0.5;
    s += 1.0 / (m * m + c * c);
  }
  double tail = (c > 0.0)
                    ? (kPi / 2.0 - std::atan(kTerms / c)) / c
                    : 1.0 / kTerms;
  return (s + tail) / (2.0 * kPi * kPi);
}

double series_var(double z) {
  double c = std::fabs(z) / (2.0 * kPi);
  const int kTerms = 50000;
  double s = 0.0;
  for (int k = kTerms; k >= 1; --k) {
    double m = k - 0.5;
    double d = m * m + c * c;
    s += 1.0 / (d * d);
  }
  s += 1.0 / (3.0 * double(kTerms) * kTerms * kTerms);
  return s / (4.0 * kPi * kPi * kPi * kPi);
}

}  // namespace

TEST_SUITE("pg-sampler") {

TEST_CASE("closed-form moments match the series oracle") {
  CHECK(pg1_mean(0.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(pg1_var(0.0) == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
  for (double z : {0.0, 1e-4, 0.004, 0.006, 0.05, 0.5, 1.0, 2.0, 5.0, 12.0}) {
    CAPTURE(z);
    CHECK(pg1_mean(z) == doctest::Approx(series_mean(z)).epsilon(1e-9));
    CHECK(pg1_var(z) == doctest::Approx(series_var(z)).epsilon(1e-9));
    // the law depends on z only through |z|
    CHECK(pg1_mean(-z) == pg1_mean(z));
    CHECK(pg1_var(-z) == pg1_var(z));
  }
}

TEST_CASE("sampler reproduces mean and variance") {
  const int n = 100000;
  for (double z : {0.0, 1.0, 2.0, 5.0}) {
    CAPTURE(z);
    RngStream rng(9000 + static_cast<std::uint64_t>(z));
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double x = pg1_draw(z, rng);
      CHECK(x > 0.0);
      s += x;
      s2 += x * x;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    double se_mean = std::sqrt(pg1_var(z) / n);
    CHECK(std::fabs(mean - pg1_mean(z)) < 4.0 * se_mean);
    CHECK(var == doctest::Approx(pg1_var(z)).epsilon(0.05));
  }
}

TEST_CASE("sampler matches the Laplace transform") {
  // E exp(-t w) = cosh(z/2) / cosh(sqrt(z^2 + 2 t) / 2)
  const int n = 200000;
  struct Case {
    double z, t;
  };
  for (auto [z, t] : {Case{0.0, 1.0}, Case{2.0, 3.0}, Case{0.7, 0.25}}) {
    CAPTURE(z);
    CAPTURE(t);
    double truth = std::cosh(0.5 * z) / std::cosh(0.5 * std::sqrt(z * z + 2.0 * t));
    RngStream rng(31 + static_cast<std::uint64_t>(10 * z + t));
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = std::exp(-t * pg1_draw(z, rng));
      s += v;
      s2 += v * v;
    }
    double mean = s / n;
    double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::fabs(mean - truth) < 5.0 * se);
  }
}

TEST_CASE("equal seeds give identical draws; sign of z is immaterial") {
  RngStream a(555), b(555), c(555);
  for (int i = 0; i < 2000; ++i) {
    double z = (i % 7) * 0.8;
    double da = pg1_draw(z, a);
    double db = pg1_draw(z, b);
    double dc = pg1_draw(-z, c);
    CHECK(da == db);
    CHECK(da == dc);
  }
}

TEST_CASE("large tilts shrink the draws") {
  // E[PG(1,z)] ~ 1/(2z) for large z; draws must follow.
  RngStream rng(77);
  const int n = 20000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += pg1_draw(50.0, rng);
  CHECK(s / n == doctest::Approx(pg1_mean(50.0)).epsilon(0.05));
  CHECK(pg1_mean(50.0) < 0.011);
}

TEST_CASE("non-finite tilt is rejected") {
  RngStream rng(1);
  CHECK_THROWS_AS(pg1_draw(std::nan(""), rng), ValidationError);
  CHECK_THROWS_AS(pg1_draw(INFINITY, rng), ValidationError);
}

}  // TEST_SUITE
