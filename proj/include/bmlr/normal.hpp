#pragma once

// Scalar normal distribution helpers. The quantile function is Wichura's
// AS 241 (PPND16) rational approximation, accurate to ~1e-15 across (0,1);
// it backs both the deterministic normal sampler and the sequential
// transform used by the multivariate normal CDF.

namespace bmlr {

// P(Z <= x) for Z ~ N(0,1).
double norm_cdf(double x);

// log P(Z <= x); switches to an asymptotic expansion in the far left tail
// where norm_cdf underflows.
double log_norm_cdf(double x);

// Inverse CDF; p must lie strictly inside (0,1).
double norm_quantile(double p);

// Standard normal density.
double norm_pdf(double x);

}  // namespace bmlr
