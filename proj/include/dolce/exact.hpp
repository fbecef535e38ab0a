#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>

namespace dolce {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

/// Binomial coefficient with the zero-outside convention:
/// C(n, r) = 0 when r < 0, r > n, or n < 0.
BigInt binom(long long n, long long r);

/// Rational -> double without overflowing on huge numerator/denominator
/// (scales both by powers of two before the final division).
double rat_to_double(const BigRat& q);

}  // namespace dolce
