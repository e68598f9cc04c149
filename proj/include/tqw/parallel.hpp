#pragma once

// Deterministic fork-join helper. Work is cut into fixed-size blocks that
// depend only on the problem size, each output element is written by
// exactly one block, and no floating-point reduction crosses blocks, so
// results are bit-identical for every parallelism degree.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace tqw {

inline std::atomic<int>& parallelism_setting() {
    static std::atomic<int> n{0};  // 0 = use hardware concurrency
    return n;
}

inline void set_parallelism(int n) { parallelism_setting().store(n); }

inline int parallelism() {
    int n = parallelism_setting().load();
    if (n <= 0) n = int(std::thread::hardware_concurrency());
    return std::max(n, 1);
}

// Calls fn(begin, end) for consecutive blocks covering [0, n).
inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    constexpr std::size_t kBlock = 8192;
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    const int nt = int(std::min<std::size_t>(std::size_t(parallelism()), nblocks));
    if (nt <= 1) {
        if (n > 0) fn(0, n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(nt);
    for (int t = 0; t < nt; ++t)
        workers.emplace_back([&, t] {
            for (std::size_t b = std::size_t(t); b < nblocks; b += std::size_t(nt))
                fn(b * kBlock, std::min(n, (b + 1) * kBlock));
        });
    for (auto& w : workers) w.join();
}

}  // namespace tqw
