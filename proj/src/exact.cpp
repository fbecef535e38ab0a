#include "dolce/exact.hpp"

#include <cmath>
#include <unordered_map>

namespace dolce {

namespace {

BigInt binom_uncached(long long n, long long r) {
    if (r > n - r) r = n - r;
    BigInt acc = 1;
    for (long long i = 1; i <= r; ++i) {
        acc *= (n - r + i);
        acc /= i;  // exact: acc holds C(n-r+i, i) at each step
    }
    return acc;
}

}  // namespace

BigInt binom(long long n, long long r) {
    if (r < 0 || n < 0 || r > n) return 0;
    if (r == 0 || r == n) return 1;
    // Cache is per-thread so concurrent kernels never contend.
    thread_local std::unordered_map<std::uint64_t, BigInt> cache;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(n) << 20) | static_cast<std::uint64_t>(std::min(r, n - r));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    BigInt v = binom_uncached(n, r);
    cache.emplace(key, v);
    return v;
}

double rat_to_double(const BigRat& q) {
    BigInt num = boost::multiprecision::numerator(q);
    BigInt den = boost::multiprecision::denominator(q);
    if (num == 0) return 0.0;
    bool neg = num < 0;
    if (neg) num = -num;

    const unsigned nb = boost::multiprecision::msb(num);
    const unsigned db = boost::multiprecision::msb(den);
    long shift_n = 0, shift_d = 0;
    if (nb > 512) {
        shift_n = static_cast<long>(nb) - 512;
        num >>= shift_n;
    }
    if (db > 512) {
        shift_d = static_cast<long>(db) - 512;
        den >>= shift_d;
    }
    double v = num.convert_to<double>() / den.convert_to<double>();
    v = std::ldexp(v, static_cast<int>(shift_n - shift_d));
    return neg ? -v : v;
}

}  // namespace dolce
