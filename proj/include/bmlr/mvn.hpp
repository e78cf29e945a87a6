#pragma once

// Multivariate normal CDF over correlation matrices. K=1 is closed form,
// K=2 reduces to a single adaptive quadrature (abs tol 1e-8), K>=3 uses the
// Genz sequential-conditioning transform with a randomly shifted Kronecker
// lattice and reports a Monte-Carlo error estimate (target 1e-4).

#include <cstdint>

#include <Eigen/Dense>

namespace bmlr {

struct MvnCdfResult {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate
};

// P(Z <= upper) for Z ~ N(0, sigma). The seed drives the QMC shifts only;
// equal seeds give identical results.
MvnCdfResult mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& sigma,
                     std::uint64_t seed = 0x9D2C5680CA359F3DULL);

}  // namespace bmlr
