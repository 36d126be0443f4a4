#include "tnloss/alloc_tracker.hpp"

#include <atomic>
#include <cstdlib>
#include <new>

// Replacement allocation operators. Every allocation carries a small header
// below the returned pointer holding the requested size and the offset back
// to the malloc base, so delete can be accounted without any side table (a
// side table would itself allocate).

namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::uint64_t> g_count{0};

struct Header {
  std::size_t size;
  std::size_t offset;  // returned pointer minus malloc base
};

void account_alloc(std::size_t size) {
  const std::size_t live = g_live.fetch_add(size, std::memory_order_relaxed) + size;
  g_count.fetch_add(1, std::memory_order_relaxed);
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (live > peak && !g_peak.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
  }
}

void* tracked_alloc(std::size_t size, std::size_t align) {
  if (align < alignof(std::max_align_t)) align = alignof(std::max_align_t);
  // Room for the header plus worst-case realignment.
  void* base = std::malloc(size + sizeof(Header) + align);
  if (base == nullptr) return nullptr;
  const std::uintptr_t raw = reinterpret_cast<std::uintptr_t>(base);
  const std::uintptr_t user = (raw + sizeof(Header) + align - 1) & ~(static_cast<std::uintptr_t>(align) - 1);
  auto* header = reinterpret_cast<Header*>(user) - 1;
  header->size = size;
  header->offset = user - raw;
  account_alloc(size);
  return reinterpret_cast<void*>(user);
}

void tracked_free(void* ptr) {
  if (ptr == nullptr) return;
  const auto* header = reinterpret_cast<const Header*>(ptr) - 1;
  g_live.fetch_sub(header->size, std::memory_order_relaxed);
  std::free(reinterpret_cast<void*>(reinterpret_cast<std::uintptr_t>(ptr) - header->offset));
}

}  // namespace

namespace tnloss::alloc {

std::size_t live_bytes() { return g_live.load(std::memory_order_relaxed); }
std::size_t peak_bytes() { return g_peak.load(std::memory_order_relaxed); }
std::uint64_t allocation_count() { return g_count.load(std::memory_order_relaxed); }
void reset_peak() { g_peak.store(g_live.load(std::memory_order_relaxed), std::memory_order_relaxed); }

}  // namespace tnloss::alloc

void* operator new(std::size_t size) {
  void* p = tracked_alloc(size, alignof(std::max_align_t));
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void* operator new[](std::size_t size) { return ::operator new(size); }

void* operator new(std::size_t size, std::align_val_t align) {
  void* p = tracked_alloc(size, static_cast<std::size_t>(align));
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void* operator new[](std::size_t size, std::align_val_t align) {
  return ::operator new(size, align);
}

void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  return tracked_alloc(size, alignof(std::max_align_t));
}

void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
  return tracked_alloc(size, alignof(std::max_align_t));
}

void* operator new(std::size_t size, std::align_val_t align, const std::nothrow_t&) noexcept {
  return tracked_alloc(size, static_cast<std::size_t>(align));
}

void* operator new[](std::size_t size, std::align_val_t align, const std::nothrow_t&) noexcept {
  return tracked_alloc(size, static_cast<std::size_t>(align));
}

void operator delete(void* ptr) noexcept { tracked_free(ptr); }
void operator delete[](void* ptr) noexcept { tracked_free(ptr); }
void operator delete(void* ptr, std::size_t) noexcept { tracked_free(ptr); }
void operator delete[](void* ptr, std::size_t) noexcept { tracked_free(ptr); }
void operator delete(void* ptr, std::align_val_t) noexcept { tracked_free(ptr); }
void operator delete[](void* ptr, std::align_val_t) noexcept { tracked_free(ptr); }
void operator delete(void* ptr, std::size_t, std::align_val_t) noexcept { tracked_free(ptr); }
void operator delete[](void* ptr, std::size_t, std::align_val_t) noexcept { tracked_free(ptr); }
void operator delete(void* ptr, const std::nothrow_t&) noexcept { tracked_free(ptr); }
void operator delete[](void* ptr, const std::nothrow_t&) noexcept { tracked_free(ptr); }
