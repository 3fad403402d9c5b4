#pragma once

#include <functional>

namespace specmap {

// Global worker count for tiled kernels. Defaults to hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Runs fn(chunk, worker) for chunk in [0, n_chunks). Chunks are assigned
// statically: worker w handles chunks w, w + W, w + 2W, ... with
// W = thread_count(). The static assignment keeps per-worker partial
// results reproducible for a given thread count. Blocks until done;
// rethrows the first worker exception. Must not be nested.
void parallel_chunks(int n_chunks, const std::function<void(int, int)>& fn);

// Seed for the library's internal randomized routines (eigensolver start
// vectors). Deterministic per seed.
void set_random_seed(unsigned long long seed);
unsigned long long random_seed();

}  // namespace specmap
