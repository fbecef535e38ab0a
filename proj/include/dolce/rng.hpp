#pragma once

#include <cstdint>

namespace dolce {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Counter-based stream generator: the (seed, stream) pair fully determines
// the sequence, so independent streams can be drawn in any order or in
// parallel and still reproduce bit-for-bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(hash_combine(mix64(seed), mix64(stream))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    std::uint64_t next_below(std::uint64_t n) { return n ? next_u64() % n : 0; }

private:
    std::uint64_t state_;
};

}  // namespace dolce
