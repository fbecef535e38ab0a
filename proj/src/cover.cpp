#include "dolce/cover.hpp"

#include "dolce/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace dolce::cover {

namespace {

bool invalid_region(long long lambda, long long k, long long L, long long C) {
    return k < 1 || lambda < 1 || k * lambda > L || C < 0 || C > L;
}

}  // namespace

BigRat pi_exact(long long lambda, long long k, long long L, long long C) {
    if (invalid_region(lambda, k, L, C) || C < lambda) return BigRat(0);

    const long long w = L - C - k * lambda + k;
    const long long u = std::min(C, 2 * lambda - 2);
    const long long m = 2 * k * lambda + 2 * lambda + w - 2 * k - k * u - 1;

    // Miss count, scaled by (k+1) to stay integral.
    BigInt miss = 2 * (k + 1) * binom(w + lambda, k + 1) + (k - 1) * BigInt(m) * binom(w + u, k);
    BigInt total = (k + 1) * binom(w + C, k) * BigInt(L - C + 1);
    return BigRat(1) - BigRat(miss, total);
}

double pi(long long lambda, long long k, long long L, long long C) {
    return rat_to_double(pi_exact(lambda, k, L, C));
}

BigRat rho_tilde_exact(long long covered, long long lambda, long long k, long long L,
                       long long C) {
    if (invalid_region(lambda, k, L, C)) return BigRat(0);
    if (covered < 0 || covered > lambda) return BigRat(0);

    // floor(d) with d = (L - C)/k - (lambda - covered)
    const long long floor_d = (L - C) / k - (lambda - covered);
    const long long t_max = std::min(covered, floor_d);
    if (t_max < 0) return BigRat(0);

    BigInt sum = 0;
    for (long long t = 0; t <= t_max; ++t) {
        const long long n_t = L - k * (lambda - covered) - t * k;
        BigInt term = binom(n_t, C) * binom(covered, t);
        if (t % 2 == 0)
            sum += term;
        else
            sum -= term;
    }
    return BigRat(binom(lambda, covered) * sum, binom(L, C));
}

double rho_tilde(double s, long long lambda, long long k, long long L, long long C) {
    const double scaled = s * static_cast<double>(lambda);
    const long long covered = std::llround(scaled);
    if (std::fabs(scaled - static_cast<double>(covered)) > 1e-9)
        throw InputError("rho_tilde: s*lambda must be an integer (use rho for off-grid s)");
    return rat_to_double(rho_tilde_exact(covered, lambda, k, L, C));
}

BigRat rho_exact(const BigRat& s, long long lambda, long long k, long long L, long long C) {
    if (invalid_region(lambda, k, L, C)) return BigRat(0);
    BigRat sc = s;
    if (sc < 0) sc = 0;
    if (sc > 1) sc = 1;

    const BigRat grid = sc * lambda;
    const BigInt num = boost::multiprecision::numerator(grid);
    const BigInt den = boost::multiprecision::denominator(grid);
    if (den == 1) {
        const long long covered = num.convert_to<long long>();
        return BigRat(lambda + 1) * rho_tilde_exact(covered, lambda, k, L, C);
    }

    const long long lo = (num / den).convert_to<long long>();  // floor, grid >= 0
    const long long hi = lo + 1;
    const BigRat a(lo, lambda);
    const BigRat b(hi, lambda);
    const BigRat scale = BigRat(lambda) * lambda + lambda;
    return scale * ((b - sc) * rho_tilde_exact(lo, lambda, k, L, C) +
                    (sc - a) * rho_tilde_exact(hi, lambda, k, L, C));
}

double rho(double s, long long lambda, long long k, long long L, long long C) {
    if (invalid_region(lambda, k, L, C)) return 0.0;
    if (s < 0) s = 0;
    if (s > 1) s = 1;
    return rat_to_double(rho_exact(BigRat(s), lambda, k, L, C));
}

BigRat pi_oracle(long long lambda, long long k, long long L, long long C) {
    if (L > 14) throw CapacityError("pi_oracle: L must be <= 14");
    if (invalid_region(lambda, k, L, C)) return BigRat(0);

    const long long n_windows = L - C + 1;
    long long placements = 0;
    long long covering_pairs = 0;

    // Span starts are 1-indexed; spans occupy [p, p+lambda-1].
    std::vector<long long> starts(k);
    std::function<void(long long, long long)> place = [&](long long idx, long long min_start) {
        if (idx == k) {
            ++placements;
            for (long long w = 1; w <= n_windows; ++w) {
                bool covered = false;
                for (long long p : starts) {
                    if (w <= p && p + lambda - 1 <= w + C - 1) {
                        covered = true;
                        break;
                    }
                }
                if (covered) ++covering_pairs;
            }
            return;
        }
        for (long long p = min_start; p + lambda - 1 <= L; ++p) {
            starts[idx] = p;
            place(idx + 1, p + lambda);
        }
    };
    place(0, 1);

    return BigRat(covering_pairs, placements * n_windows);
}

BigRat rho_oracle(long long covered, long long lambda, long long k, long long L,
                  long long C) {
    if (L > 12) throw CapacityError("rho_oracle: L must be <= 12");
    if (invalid_region(lambda, k, L, C)) return BigRat(0);
    if (covered < 0 || covered > lambda) return BigRat(0);

    const long long n_windows = L - C + 1;
    long long partitions = 0;
    long long matching_pairs = 0;

    std::vector<unsigned> window_masks(n_windows);
    for (long long w = 0; w < n_windows; ++w)
        window_masks[w] = ((1u << C) - 1u) << w;  // window w+1 covers units w+1..w+C

    std::vector<unsigned> group_masks(lambda);

    // Partition the occupied positions into unordered groups of size k:
    // the lowest remaining position leads a new group, partners are chosen
    // from positions above it. Each unordered partition appears once.
    std::function<void(unsigned, long long)> split_groups = [&](unsigned remaining,
                                                                long long g) {
        if (g == lambda) {
            ++partitions;
            for (long long w = 0; w < n_windows; ++w) {
                long long hit = 0;
                for (long long gi = 0; gi < lambda; ++gi)
                    if (group_masks[gi] & window_masks[w]) ++hit;
                if (hit == covered) ++matching_pairs;
            }
            return;
        }
        const unsigned leader = remaining & (~remaining + 1u);  // lowest set bit
        const unsigned rest = remaining & ~leader;
        // Choose k-1 partners out of the positions in `rest`.
        std::vector<unsigned> pool;
        for (unsigned b = rest; b; b &= b - 1) pool.push_back(b & (~b + 1u));
        std::vector<long long> idx(k - 1);
        std::function<void(long long, long long)> choose = [&](long long slot, long long from) {
            if (slot == k - 1) {
                unsigned mask = leader;
                for (long long s = 0; s < k - 1; ++s) mask |= pool[idx[s]];
                group_masks[g] = mask;
                split_groups(remaining & ~mask, g + 1);
                return;
            }
            for (long long i = from; i < static_cast<long long>(pool.size()); ++i) {
                idx[slot] = i;
                choose(slot + 1, i + 1);
            }
        };
        choose(0, 0);
    };

    // Enumerate occupied position sets of size k*lambda as bitmasks.
    const long long occupied = k * lambda;
    for (unsigned set = 0; set < (1u << L); ++set) {
        if (__builtin_popcount(set) != occupied) continue;
        split_groups(set, 0);
    }

    return BigRat(matching_pairs, partitions * n_windows);
}

}  // namespace dolce::cover
