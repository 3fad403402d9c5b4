#include "specmap/memtrack.hpp"

#include <atomic>
#include <cerrno>
#include <cstddef>
#include <malloc.h>

// Allocation accounting via glibc interposition. Defining malloc/free here
// makes the linker route every allocation in the binary (including Eigen's,
// which go through std::malloc) to these wrappers; the stock implementations
// remain reachable as __libc_*. Binaries that never reference this
// translation unit keep the stock allocator and report inactive stats.

extern "C" {
void* __libc_malloc(size_t size);
void __libc_free(void* ptr);
void* __libc_calloc(size_t n, size_t size);
void* __libc_realloc(void* ptr, size_t size);
void* __libc_memalign(size_t alignment, size_t size);
}

namespace {

std::atomic<long long> g_current{0};
std::atomic<long long> g_window_base{0};
std::atomic<long long> g_window_peak{0};  // max of current - base since reset
std::atomic<long long> g_max_single{0};
std::atomic<unsigned long long> g_alloc_count{0};
std::atomic<bool> g_active{false};

void atomic_max(std::atomic<long long>& slot, long long value) {
  long long cur = slot.load(std::memory_order_relaxed);
  while (value > cur && !slot.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

void note_alloc(void* ptr) {
  if (!ptr) return;
  g_active.store(true, std::memory_order_relaxed);
  const long long size = static_cast<long long>(malloc_usable_size(ptr));
  const long long current =
      g_current.fetch_add(size, std::memory_order_relaxed) + size;
  atomic_max(g_window_peak, current - g_window_base.load(std::memory_order_relaxed));
  atomic_max(g_max_single, size);
  g_alloc_count.fetch_add(1, std::memory_order_relaxed);
}

void note_free(void* ptr) {
  if (!ptr) return;
  g_current.fetch_sub(static_cast<long long>(malloc_usable_size(ptr)),
                      std::memory_order_relaxed);
}

}  // namespace

extern "C" {

void* malloc(size_t size) {
  void* ptr = __libc_malloc(size);
  note_alloc(ptr);
  return ptr;
}

void free(void* ptr) {
  note_free(ptr);
  __libc_free(ptr);
}

void* calloc(size_t n, size_t size) {
  void* ptr = __libc_calloc(n, size);
  note_alloc(ptr);
  return ptr;
}

void* realloc(void* ptr, size_t size) {
  note_free(ptr);
  void* out = __libc_realloc(ptr, size);
  if (!out && size > 0) {
    note_alloc(ptr);  // failed realloc leaves the old block alive
    return out;
  }
  note_alloc(out);
  return out;
}

void* memalign(size_t alignment, size_t size) {
  void* ptr = __libc_memalign(alignment, size);
  note_alloc(ptr);
  return ptr;
}

void* aligned_alloc(size_t alignment, size_t size) {
  void* ptr = __libc_memalign(alignment, size);
  note_alloc(ptr);
  return ptr;
}

int posix_memalign(void** out, size_t alignment, size_t size) {
  if (alignment < sizeof(void*) || (alignment & (alignment - 1)) != 0) return EINVAL;
  void* ptr = __libc_memalign(alignment, size);
  if (!ptr) return ENOMEM;
  note_alloc(ptr);
  *out = ptr;
  return 0;
}

void* valloc(size_t size) {
  void* ptr = __libc_memalign(4096, size);
  note_alloc(ptr);
  return ptr;
}

}  // extern "C"

namespace specmap::memtrack {

bool active() { return g_active.load(std::memory_order_relaxed); }

void reset_window() {
  const long long current = g_current.load(std::memory_order_relaxed);
  g_window_base.store(current, std::memory_order_relaxed);
  g_window_peak.store(0, std::memory_order_relaxed);
  g_max_single.store(0, std::memory_order_relaxed);
  g_alloc_count.store(0, std::memory_order_relaxed);
}

Stats stats() {
  Stats s;
  const long long current = g_current.load(std::memory_order_relaxed);
  const long long peak = g_window_peak.load(std::memory_order_relaxed);
  const long long single = g_max_single.load(std::memory_order_relaxed);
  s.current_bytes = current > 0 ? static_cast<std::uint64_t>(current) : 0;
  s.window_peak_bytes = peak > 0 ? static_cast<std::uint64_t>(peak) : 0;
  s.max_single_bytes = single > 0 ? static_cast<std::uint64_t>(single) : 0;
  s.alloc_count = g_alloc_count.load(std::memory_order_relaxed);
  return s;
}

}  // namespace specmap::memtrack
