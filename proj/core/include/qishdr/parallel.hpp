#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace qishdr {

/// Splits [0, count) into contiguous chunks and runs `fn(begin, end)` on
/// `threads` workers (0 = hardware concurrency). Callers must make the work
/// order-independent; all simulation randomness is keyed per pixel so the
/// split never affects results.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    unsigned n = threads > 0 ? static_cast<unsigned>(threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    if (n <= 1 || count < 2) {
        fn(std::size_t{0}, count);
        return;
    }
    n = static_cast<unsigned>(std::min<std::size_t>(n, count));
    const std::size_t chunk = (count + n - 1) / n;
    std::vector<std::thread> workers;
    workers.reserve(n);
    for (unsigned t = 0; t < n; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& w : workers) w.join();
}

} // namespace qishdr
