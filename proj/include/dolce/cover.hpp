#pragma once

#include "dolce/exact.hpp"

namespace dolce::cover {

// Exact combinatorial kernels for span-cover probabilities.
//
// pi(lambda, k; L, C): probability that a length-C observation window placed
// uniformly over a length-L unit sequence fully covers at least one of k
// non-overlapping length-lambda spans (themselves placed uniformly).
//
// rho_tilde(s, lambda, k; L, C): probability that the window intersects
// exactly s*lambda of lambda unit-span groups, each group having k members.
// rho is its piecewise-linear density extension over s in [0,1].
//
// All kernels return 0 outside the validity region (k < 1, lambda < 1,
// k*lambda > L, and for pi additionally C < lambda).

BigRat pi_exact(long long lambda, long long k, long long L, long long C);
double pi(long long lambda, long long k, long long L, long long C);

/// covered = s*lambda as an integer in [0, lambda].
BigRat rho_tilde_exact(long long covered, long long lambda, long long k, long long L,
                       long long C);

/// Convenience wrapper; s*lambda must be integral (within 1e-9).
double rho_tilde(double s, long long lambda, long long k, long long L, long long C);

/// Density extension: (lambda+1)*rho_tilde on grid points, linear
/// interpolation scaled by (lambda^2+lambda) between them.
BigRat rho_exact(const BigRat& s, long long lambda, long long k, long long L, long long C);
double rho(double s, long long lambda, long long k, long long L, long long C);

// Brute-force enumeration oracles. Same probabilities, independent counting
// path; guarded against combinatorial blowup.

/// Enumerates every placement of k non-overlapping length-lambda spans and
/// every window position. Requires L <= 14.
BigRat pi_oracle(long long lambda, long long k, long long L, long long C);

/// Enumerates every partition of k*lambda occupied unit positions into
/// lambda unordered groups of k, and every window. Requires L <= 12.
BigRat rho_oracle(long long covered, long long lambda, long long k, long long L,
                  long long C);

}  // namespace dolce::cover
