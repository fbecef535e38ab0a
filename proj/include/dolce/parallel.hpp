#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace dolce {

/// Runs fn(i) for i in [0, n). Items must be independent; results land in
/// caller-owned per-index slots, so the outcome is identical regardless of
/// thread count or scheduling.
template <typename Fn>
void parallel_for_each(std::size_t n, Fn&& fn) {
    const std::size_t hw = std::thread::hardware_concurrency();
    const std::size_t workers = std::min(n, hw ? hw : 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace dolce
