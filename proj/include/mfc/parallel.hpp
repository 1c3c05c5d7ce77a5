#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace mfc {

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on up to `threads` threads.
/// Chunks are disjoint, so results never depend on the thread count.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn)
{
    threads = std::clamp(threads, 1, std::max(n, 1));
    if (threads == 1) {
        fn(0, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const int b = static_cast<int>(static_cast<long long>(n) * t / threads);
        const int e = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
}

} // namespace mfc
