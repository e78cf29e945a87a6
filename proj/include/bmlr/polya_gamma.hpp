#pragma once

// Exact Polya-Gamma PG(1, z) sampling via the alternating-series rejection
// method of Devroye (2009) as arranged by Polson, Scott & Windle (2013):
// a mixture proposal of a truncated exponential on (t, inf) and a truncated
// inverse-Gaussian on (0, t] with t = 0.64, followed by a squeeze on the
// partial sums of the Jacobi-theta series. No truncation or approximation
// is involved; every accepted draw is exact.

#include "bmlr/rng.hpp"

namespace bmlr {

// One draw from PG(1, z); z may be any finite real (the law depends on |z|).
double pg1_draw(double z, RngStream& rng);

// E[PG(1, z)] = tanh(z/2) / (2z), with the z -> 0 limit 1/4.
double pg1_mean(double z);

// Var[PG(1, z)] = (sinh(z) - z) / (4 z^3 cosh^2(z/2)), limit 1/24 at z = 0.
double pg1_var(double z);

}  // namespace bmlr
