#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

#include "error.hpp"

namespace vmeval {

/// Calls fn(i) for i in [0, n) on at most `limit` threads; the calling
/// thread is one of them. fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, std::size_t limit, Fn&& fn) {
    if (limit == 0) throw ArgumentError("concurrency limit must be at least 1");
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < n; k = next++) fn(k);
    };
    const std::size_t workers = std::min(limit, std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

} // namespace vmeval
