#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "amde/modulator.hpp"
#include "amde/tensor.hpp"

namespace amde {

enum class MemoryOrigin { FoundationRefresh, Autoregressive };

// Four-level feature pyramid carrying foundation-quality features across
// frames. Updated either wholesale (refresh) or by writing back the fused
// output (commit).
struct MemoryPyramid {
  std::array<FeatureMap, 4> levels;
  std::int64_t frame = 0;  // update counter
  MemoryOrigin origin = MemoryOrigin::FoundationRefresh;

  FeatureMap& level(int l) { return levels[l - 1]; }
  const FeatureMap& level(int l) const { return levels[l - 1]; }
};

MemoryPyramid init_memory(const std::array<FeatureMap, 4>& features);

// Checked variant for pyramids assembled at runtime (e.g. loaded from disk);
// rejects anything but exactly four levels.
MemoryPyramid init_memory(const std::vector<FeatureMap>& features);

// Per-pixel convex mix O = T * M + (1 - T) * obs, the single trust channel
// broadcast across feature channels. Computed as obs + T * (M - obs) and
// clamped to the envelope of the two inputs, so the output never leaves
// [min(M, obs), max(M, obs)] and identical inputs pass through bit-exactly.
std::array<FeatureMap, 4> fuse(const MemoryPyramid& mem,
                               const std::array<FeatureMap, 4>& obs,
                               const ModulationField& trust);

// Write the fused output back as the next frame's memory.
MemoryPyramid commit(const MemoryPyramid& mem, const std::array<FeatureMap, 4>& fused);

// Overwrite memory wholesale with fresh foundation features.
MemoryPyramid refresh(const MemoryPyramid& mem, const std::array<FeatureMap, 4>& foundation);

// Weight of the initial memory after the recorded trust history: the
// per-pixel product of the per-frame T fields at the given level.
FeatureMap decay_weight(const std::vector<ModulationField>& trust_history, int level);

// Fraction of layer-1 pixels whose trust falls below the threshold
// (encoder-dominated regions).
double fastpath_fraction(const ModulationField& trust, double threshold);

// Replay-debugging snapshots: one tensor file per level,
// <prefix>.l<1..4>.amde.
void save_memory_snapshot(const std::string& prefix, const MemoryPyramid& mem);
MemoryPyramid load_memory_snapshot(const std::string& prefix);

}  // namespace amde
