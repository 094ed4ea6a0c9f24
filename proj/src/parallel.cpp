// SPDX-License-Identifier: Apache-2.0
#include "procam/parallel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace procam {

static int g_threads = 0;

void set_thread_count(int n) { g_threads = n; }

int thread_count() {
    if (g_threads > 0) return g_threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, int)>& fn) {
    int workers = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
    if (workers <= 1 || n < 2) {
        if (n > 0) fn(0, n, 0);
        return;
    }
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) {
        std::size_t b = w * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([=, &fn] { fn(b, e, w); });
    }
    fn(0, std::min(n, chunk), 0);
    for (auto& t : pool) t.join();
}

}  // namespace procam
