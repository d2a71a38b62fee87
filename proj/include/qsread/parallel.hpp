#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace qsread {

namespace detail {
inline std::atomic<int>& thread_count() {
    static std::atomic<int> n{1};
    return n;
}
} // namespace detail

/// Global worker count for parallel loops (1 = serial). Set once from the CLI;
/// results are byte-identical for any value because every index writes its own slot.
inline int max_threads() { return detail::thread_count().load(); }
inline void set_max_threads(int n) { detail::thread_count().store(n < 1 ? 1 : n); }

/// Runs body(i) for i in [0, n). Strided static split over max_threads().
template <typename F>
void parallel_for(std::size_t n, F&& body) {
    int nt = max_threads();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::size_t workers = std::min<std::size_t>(nt, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace qsread
