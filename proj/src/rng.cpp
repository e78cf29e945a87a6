#include "bmlr/rng.hpp"

#include <cmath>

#include "bmlr/errors.hpp"
#include "bmlr/normal.hpp"

namespace bmlr {

double RngStream::normal() { return norm_quantile(uniform()); }

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::gamma(double shape) {
  if (!(shape > 0.0))
    throw ValidationError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost from shape+1; u^(1/shape) stays in (0,1) since uniform() does.
    double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

int RngStream::categorical(const double* weights, int n) {
  if (n <= 0) throw ValidationError("categorical: need at least one weight");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0))
      throw ValidationError("categorical: weights must be nonnegative");
    total += weights[i];
  }
  if (!(total > 0.0))
    throw ValidationError("categorical: weights sum to zero");
  double u = uniform() * total;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Floating-point residue: fall back to the last positive weight.
  for (int i = n - 1; i >= 0; --i)
    if (weights[i] > 0.0) return i;
  return n - 1;
}

}  // namespace bmlr
