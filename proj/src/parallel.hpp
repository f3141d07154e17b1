#ifndef GRIDADMM_PARALLEL_HPP
#define GRIDADMM_PARALLEL_HPP

#include <cstddef>
#include <thread>
#include <vector>

namespace gridadmm {

// Static block partition of [0, n) over `workers` threads.  Each index is
// processed exactly once and workers write to disjoint slots, so results do
// not depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nw = std::min<std::size_t>(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(nw);
    const std::size_t chunk = (n + nw - 1) / nw;
    for (std::size_t w = 0; w < nw; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace gridadmm

#endif
