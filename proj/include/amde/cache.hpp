#pragma once

#include <atomic>
#include <cstdint>
#include <optional>

#include "amde/smu.hpp"

namespace amde {

// Versioned snapshot exchanged between the slow-path writer and the
// fast-path reader.
struct CacheSlot {
  std::uint64_t version = 0;      // monotonically increasing, 1-based
  std::int64_t source_frame = 0;  // frame the slow path ran on
  MemoryPyramid snapshot;
  std::uint64_t checksum = 0;     // over payload bits + metadata
};

std::uint64_t cache_checksum(const MemoryPyramid& snapshot, std::uint64_t version,
                             std::int64_t source_frame);

// Single-writer double-buffered snapshot cache. Version v lives in buffer
// v & 1, so the writer only ever overwrites the buffer two publishes back.
// Each buffer carries a seqlock counter (odd while being rewritten); the
// reader copies the payload, revalidates the counter, and on mismatch
// re-resolves the latest version. The reader never blocks the writer and
// observes non-decreasing versions; a read before the first publish
// reports an empty cache.
//
// Payload words are accessed through relaxed std::atomic_ref on both
// sides; the buffer counters and the latest-version counter carry the
// acquire/release ordering.
class FeatureCache {
 public:
  // Buffer shapes are fixed at construction; publishing a snapshot with a
  // different shape is an error.
  explicit FeatureCache(const MemoryPyramid& shape_template);

  FeatureCache(const FeatureCache&) = delete;
  FeatureCache& operator=(const FeatureCache&) = delete;

  void publish(const MemoryPyramid& snapshot, std::int64_t source_frame);

  // Copies the newest consistent snapshot into out. Returns false while
  // the cache is empty. out is reused across calls without reallocation
  // when shapes match.
  bool read_latest(CacheSlot& out) const;
  std::optional<CacheSlot> read_latest() const;

  // Relaxed peek at the newest published version (0 = empty).
  std::uint64_t latest_version() const {
    return latest_.load(std::memory_order_relaxed);
  }

 private:
  struct Buffer {
    std::atomic<std::uint64_t> seq{0};  // 2v after writing v, 2v-1 during
    CacheSlot slot;
  };

  Buffer buffers_[2];
  std::atomic<std::uint64_t> latest_{0};
};

}  // namespace amde
