#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ctgsm {

// Chunked parallel loop over [0, n). Each index is processed by exactly one
// thread with the same per-index computation as the serial path, so results
// are deterministic as long as the body writes disjoint outputs.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         std::size_t grain = 256) {
    const std::size_t hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n <= grain) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t n_threads = std::min(hw, (n + grain - 1) / grain);
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace ctgsm
