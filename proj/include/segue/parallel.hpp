#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace segue {

/// Worker cap for candidate scoring: SEGUE_THREADS when set, otherwise the
/// hardware count clamped to 4. Results never depend on the cap.
inline unsigned scoring_threads() {
    if (const char* env = std::getenv("SEGUE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
        return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : std::min(hw, 4u);
}

/// Index-parallel loop: fn(i) for i in [0, n). Each index writes only its own
/// output slot, so the result is identical for any thread count.
template <typename Fn>
inline void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(scoring_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace segue
