#include "bmlr/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmlr/errors.hpp"
#include "bmlr/normal.hpp"
#include "bmlr/rng.hpp"

namespace bmlr {

namespace {

void validate_inputs(const Eigen::VectorXd& upper,
                     const Eigen::MatrixXd& sigma) {
  const int k = static_cast<int>(upper.size());
  if (k < 1) throw ValidationError("mvn_cdf: need at least one variable");
  if (sigma.rows() != k || sigma.cols() != k)
    throw ValidationError("mvn_cdf: sigma must be " + std::to_string(k) + "x" +
                          std::to_string(k));
  for (int i = 0; i < k; ++i) {
    if (!std::isfinite(upper(i)))
      throw ValidationError("mvn_cdf: limits must be finite");
    if (std::abs(sigma(i, i) - 1.0) > 1e-12)
      throw ValidationError("mvn_cdf: sigma must have unit diagonal");
    for (int j = 0; j < k; ++j) {
      if (!std::isfinite(sigma(i, j)))
        throw ValidationError("mvn_cdf: sigma must be finite");
      if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-12)
        throw ValidationError("mvn_cdf: sigma must be symmetric");
      if (std::abs(sigma(i, j)) > 1.0 + 1e-12)
        throw ValidationError("mvn_cdf: correlations must lie in [-1,1]");
    }
  }
}

struct BvnIntegrand {
  double c2, rho, s;
  double operator()(double z) const {
    return norm_pdf(z) * norm_cdf((c2 - rho * z) / s);
  }
};

double simpson_split(const BvnIntegrand& f, double a, double m, double b,
                     double fa, double fm, double fb, double whole, double tol,
                     int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_split(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_split(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

MvnCdfResult bivariate_cdf(double c1, double c2, double rho) {
  if (rho == 0.0) return {norm_cdf(c1) * norm_cdf(c2), 1e-15};
  if (rho == 1.0) return {norm_cdf(std::min(c1, c2)), 1e-15};
  if (rho == -1.0)
    return {std::max(0.0, norm_cdf(c1) + norm_cdf(c2) - 1.0), 1e-15};
  // P(Z1<=c1, Z2<=c2) = int_{-inf}^{c1} pdf(z) Phi((c2 - rho z)/s) dz
  const double lo = -8.5;  // density mass below is ~1e-17
  double hi = std::min(c1, 8.5);
  if (hi <= lo) return {0.0, 1e-15};
  BvnIntegrand f{c2, rho, std::sqrt(1.0 - rho * rho)};
  double m = 0.5 * (lo + hi);
  double fa = f(lo), fm = f(m), fb = f(hi);
  double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  double v = simpson_split(f, lo, m, hi, fa, fm, fb, whole, 1e-9, 60);
  return {std::min(1.0, std::max(0.0, v)), 1e-8};
}

// One randomly shifted Kronecker-lattice estimate of the Genz transform.
double genz_replicate(const Eigen::VectorXd& b, const Eigen::MatrixXd& chol,
                      const Eigen::VectorXd& alpha, Eigen::VectorXd u,
                      Eigen::VectorXd& y, long npts) {
  const int k = static_cast<int>(b.size());
  double sum = 0.0;
  for (long n = 0; n < npts; ++n) {
    for (int j = 0; j < k - 1; ++j) {
      u(j) += alpha(j);
      if (u(j) >= 1.0) u(j) -= 1.0;
    }
    double e = norm_cdf(b(0) / chol(0, 0));
    double f = e;
    for (int i = 1; i < k; ++i) {
      if (e <= 0.0) {
        f = 0.0;
        break;
      }
      double p = u(i - 1) * e;
      if (p < 1e-300) p = 1e-300;
      y(i - 1) = norm_quantile(p);
      double num = b(i);
      for (int j = 0; j < i; ++j) num -= chol(i, j) * y(j);
      e = norm_cdf(num / chol(i, i));
      f *= e;
    }
    sum += f;
  }
  return sum / static_cast<double>(npts);
}

MvnCdfResult genz_qmc(const Eigen::VectorXd& b, const Eigen::MatrixXd& sigma,
                      std::uint64_t seed) {
  const int k = static_cast<int>(b.size());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw ValidationError("mvn_cdf: correlation matrix must be positive definite");
  Eigen::MatrixXd chol = llt.matrixL();

  static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23};
  Eigen::VectorXd alpha(k - 1);
  for (int j = 0; j < k - 1; ++j) {
    double r = std::sqrt(primes[j]);
    alpha(j) = r - std::floor(r);
  }

  const int replicates = 10;
  const double tol = 1e-4;
  RngStream root(seed);
  Eigen::VectorXd y(k - 1), shift(k - 1), means(replicates);
  long npts = 2048;
  MvnCdfResult out;
  for (int attempt = 0; attempt < 10; ++attempt) {
    for (int s = 0; s < replicates; ++s) {
      RngStream stream = root.substream(attempt * replicates + s);
      for (int j = 0; j < k - 1; ++j) shift(j) = stream.uniform();
      means(s) = genz_replicate(b, chol, alpha, shift, y, npts);
    }
    double mean = means.mean();
    double var = (means.array() - mean).square().sum() / (replicates - 1.0);
    out.value = std::min(1.0, std::max(0.0, mean));
    out.error = 3.0 * std::sqrt(var / replicates);
    if (out.error <= tol) return out;
    npts *= 2;
  }
  return out;
}

}  // namespace

MvnCdfResult mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& sigma,
                     std::uint64_t seed) {
  validate_inputs(upper, sigma);
  const int k = static_cast<int>(upper.size());
  if (k == 1) return {norm_cdf(upper(0)), 1e-15};
  if (k == 2) return bivariate_cdf(upper(0), upper(1), sigma(0, 1));
  return genz_qmc(upper, sigma, seed);
}

}  // namespace bmlr
