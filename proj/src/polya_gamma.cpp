#include "bmlr/polya_gamma.hpp"

#include <cmath>

#include "bmlr/errors.hpp"
#include "bmlr/normal.hpp"

namespace bmlr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTrunc = 0.64;        // proposal split point t
constexpr double kTruncRecip = 1.0 / kTrunc;

// Series coefficient a_n(x) of the J*(1, 0) density; the exponential tilt
// by z is carried entirely by the proposal.
double series_coef(int n, double x) {
  double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  double expnt =
      -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
      2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(expnt);
}

// P(proposal falls in the exponential piece (t, inf)) for tilt parameter z.
double mass_texpon(double z) {
  double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  double b = std::sqrt(kTruncRecip) * (kTrunc * z - 1.0);
  double a = -std::sqrt(kTruncRecip) * (kTrunc * z + 1.0);
  double x0 = std::log(fz) + fz * kTrunc;
  double xb = x0 - z + log_norm_cdf(b);
  double xa = x0 + z + log_norm_cdf(a);
  double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse-Gaussian(1/z, 1) restricted to (0, t]. For 1/z > t the scale-free
// rejection of Devroye is cheaper; otherwise Michael-Schucany-Haas draws
// are rejected until they land inside the truncation.
double rtigauss(double z, RngStream& rng) {
  z = std::fabs(z);
  double x = kTrunc + 1.0;
  if (kTruncRecip > z) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    double mu = 1.0 / z;
    while (x > kTrunc) {
      double y = rng.normal();
      y *= y;
      double mu_y = mu * y;
      x = mu + 0.5 * mu * mu_y - 0.5 * mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

}  // namespace

double pg1_draw(double z, RngStream& rng) {
  if (!std::isfinite(z))
    throw ValidationError("pg1_draw: tilt parameter must be finite");
  z = 0.5 * std::fabs(z);  // PG(1, z) = J*(1, z/2) / 4
  double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  double p_right = mass_texpon(z);
  for (;;) {
    double x;
    if (rng.uniform() < p_right)
      x = kTrunc + rng.exponential() / fz;
    else
      x = rtigauss(z, rng);
    // Alternating-series squeeze: accept when the decreasing odd partial
    // sum already dominates, reject when an even partial sum falls below.
    double s = series_coef(0, x);
    double y = rng.uniform() * s;
    int n = 0;
    for (;;) {
      ++n;
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

double pg1_mean(double z) {
  z = std::fabs(z);
  if (z < 1e-6) {
    // tanh(z/2)/(2z) = 1/4 - z^2/48 + O(z^4)
    return 0.25 - z * z / 48.0;
  }
  return std::tanh(0.5 * z) / (2.0 * z);
}

double pg1_var(double z) {
  z = std::fabs(z);
  if (z < 0.005) {
    // Series around 0 avoids the sinh(z) - z cancellation:
    // 1/24 - z^2/120 + 0.0012648... z^4 + O(z^6)
    double z2 = z * z;
    return 1.0 / 24.0 - z2 / 120.0 + 0.00126488095238095 * z2 * z2;
  }
  double ch = std::cosh(0.5 * z);
  return (std::sinh(z) - z) / (4.0 * z * z * z * ch * ch);
}

}  // namespace bmlr
