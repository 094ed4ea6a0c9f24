// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace procam {

// Global worker count, set once by the CLI (--threads).  0 = hardware.
void set_thread_count(int n);
int thread_count();

// Static partition of [0, n) into one contiguous chunk per worker.
// fn(begin, end, worker_index).  Worker 0 runs on the calling thread.
// Chunking depends only on n and the worker count, so per-worker
// accumulators merged in worker order are deterministic.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace procam
