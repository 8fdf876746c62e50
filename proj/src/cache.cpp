#include "amde/cache.hpp"

#include <cstring>
#include <thread>

#include "amde/errors.hpp"

namespace amde {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline void fnv_mix(std::uint64_t& h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xffULL;
    h *= kFnvPrime;
  }
}

inline std::uint64_t double_bits(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return bits;
}

// relaxed word-wise copies; ordering comes from the seqlock counters
void atomic_store_payload(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::atomic_ref<double>(dst[i]).store(src[i], std::memory_order_relaxed);
  }
}

// atomic_ref cannot bind to const in C++20; the casts below only ever load
template <typename T>
inline T atomic_peek(const T& ref) {
  return std::atomic_ref<T>(const_cast<T&>(ref)).load(std::memory_order_relaxed);
}

void atomic_load_payload(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = atomic_peek(src[i]);
  }
}

void ensure_same_shape(const MemoryPyramid& a, const MemoryPyramid& b, const char* op) {
  for (int i = 0; i < 4; ++i) {
    if (!a.levels[i].same_shape(b.levels[i])) {
      throw InvalidArgumentError(std::string(op) +
                                 ": snapshot shape differs from the cache buffers");
    }
  }
}

}  // namespace

std::uint64_t cache_checksum(const MemoryPyramid& snapshot, std::uint64_t version,
                             std::int64_t source_frame) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, version);
  fnv_mix(h, static_cast<std::uint64_t>(source_frame));
  for (const FeatureMap& level : snapshot.levels) {
    fnv_mix(h, static_cast<std::uint64_t>(level.channels));
    fnv_mix(h, static_cast<std::uint64_t>(level.height));
    fnv_mix(h, static_cast<std::uint64_t>(level.width));
    for (double v : level.data) fnv_mix(h, double_bits(v));
  }
  return h;
}

FeatureCache::FeatureCache(const MemoryPyramid& shape_template) {
  for (Buffer& b : buffers_) {
    b.slot.snapshot = shape_template;
    for (FeatureMap& level : b.slot.snapshot.levels) {
      std::fill(level.data.begin(), level.data.end(), 0.0);
    }
  }
}

void FeatureCache::publish(const MemoryPyramid& snapshot, std::int64_t source_frame) {
  const std::uint64_t v = latest_.load(std::memory_order_relaxed) + 1;
  Buffer& buf = buffers_[v & 1];
  ensure_same_shape(buf.slot.snapshot, snapshot, "publish");

  buf.seq.store(2 * v - 1, std::memory_order_relaxed);
  std::atomic_thread_fence(std::memory_order_release);

  CacheSlot& slot = buf.slot;
  std::atomic_ref<std::uint64_t>(slot.version).store(v, std::memory_order_relaxed);
  std::atomic_ref<std::int64_t>(slot.source_frame)
      .store(source_frame, std::memory_order_relaxed);
  for (int i = 0; i < 4; ++i) {
    atomic_store_payload(slot.snapshot.levels[i].data, snapshot.levels[i].data);
  }
  slot.snapshot.frame = snapshot.frame;
  slot.snapshot.origin = snapshot.origin;
  std::atomic_ref<std::uint64_t>(slot.checksum)
      .store(cache_checksum(snapshot, v, source_frame), std::memory_order_relaxed);

  buf.seq.store(2 * v, std::memory_order_release);
  latest_.store(v, std::memory_order_release);
}

bool FeatureCache::read_latest(CacheSlot& out) const {
  int spins = 0;
  for (;;) {
    const std::uint64_t v = latest_.load(std::memory_order_acquire);
    if (v == 0) return false;
    const Buffer& buf = buffers_[v & 1];

    const std::uint64_t q1 = buf.seq.load(std::memory_order_acquire);
    if (q1 != 2 * v) {
      // buffer already claimed by a newer publish; re-resolve the version
      if (++spins > 16) std::this_thread::yield();
      continue;
    }

    const CacheSlot& slot = buf.slot;
    out.version = atomic_peek(slot.version);
    out.source_frame = atomic_peek(slot.source_frame);
    for (int i = 0; i < 4; ++i) {
      const FeatureMap& src = slot.snapshot.levels[i];
      FeatureMap& dst = out.snapshot.levels[i];
      if (!dst.same_shape(src)) {
        dst = FeatureMap(src.channels, src.height, src.width, src.level);
      }
      atomic_load_payload(dst.data, src.data);
    }
    out.snapshot.frame = out.source_frame;
    out.snapshot.origin = MemoryOrigin::FoundationRefresh;
    out.checksum = atomic_peek(slot.checksum);

    std::atomic_thread_fence(std::memory_order_acquire);
    const std::uint64_t q2 = buf.seq.load(std::memory_order_relaxed);
    if (q1 == q2) return true;
    if (++spins > 16) std::this_thread::yield();
  }
}

std::optional<CacheSlot> FeatureCache::read_latest() const {
  CacheSlot slot;
  if (!read_latest(slot)) return std::nullopt;
  return slot;
}

}  // namespace amde
