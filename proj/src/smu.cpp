#include "amde/smu.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amde/errors.hpp"

namespace amde {

namespace {

void validate_pyramid(const std::array<FeatureMap, 4>& levels, const char* op) {
  const int channels = levels[0].channels;
  for (int i = 0; i < 4; ++i) {
    const FeatureMap& m = levels[i];
    if (m.channels <= 0 || m.height <= 0 || m.width <= 0 ||
        m.data.size() != static_cast<std::size_t>(m.channels) * m.height * m.width) {
      throw InvalidArgumentError(std::string(op) + ": level " + std::to_string(i + 1) +
                                 " is empty or inconsistent");
    }
    if (m.channels != channels) {
      throw InvalidArgumentError(std::string(op) + ": channel count differs across levels");
    }
    for (double v : m.data) {
      if (!std::isfinite(v)) {
        throw InvalidArgumentError(std::string(op) + ": non-finite value at level " +
                                   std::to_string(i + 1));
      }
    }
  }
}

void require_matching(const std::array<FeatureMap, 4>& a,
                      const std::array<FeatureMap, 4>& b, const char* op) {
  for (int i = 0; i < 4; ++i) {
    if (!a[i].same_shape(b[i])) {
      throw InvalidArgumentError(std::string(op) + ": shape mismatch at level " +
                                 std::to_string(i + 1));
    }
  }
}

}  // namespace

MemoryPyramid init_memory(const std::array<FeatureMap, 4>& features) {
  validate_pyramid(features, "init_memory");
  MemoryPyramid mem;
  mem.levels = features;
  mem.frame = 0;
  mem.origin = MemoryOrigin::FoundationRefresh;
  return mem;
}

MemoryPyramid init_memory(const std::vector<FeatureMap>& features) {
  if (features.size() != 4) {
    throw InvalidArgumentError("init_memory: expected 4 levels, got " +
                               std::to_string(features.size()));
  }
  std::array<FeatureMap, 4> levels;
  std::copy(features.begin(), features.end(), levels.begin());
  return init_memory(levels);
}

std::array<FeatureMap, 4> fuse(const MemoryPyramid& mem,
                               const std::array<FeatureMap, 4>& obs,
                               const ModulationField& trust) {
  require_matching(mem.levels, obs, "fuse");
  std::array<FeatureMap, 4> out;
  for (int i = 0; i < 4; ++i) {
    const FeatureMap& m = mem.levels[i];
    const FeatureMap& o = obs[i];
    const FeatureMap& t = trust.levels[i];
    if (t.channels != 1 || t.height != m.height || t.width != m.width) {
      throw InvalidArgumentError("fuse: trust field shape mismatch at level " +
                                 std::to_string(i + 1));
    }
    FeatureMap fused = o;
    const int pixels = m.height * m.width;
    for (int c = 0; c < m.channels; ++c) {
      const std::size_t base = static_cast<std::size_t>(c) * pixels;
      for (int p = 0; p < pixels; ++p) {
        const double mv = m.data[base + p];
        const double ov = o.data[base + p];
        const double v = ov + t.data[p] * (mv - ov);
        fused.data[base + p] = std::clamp(v, std::min(mv, ov), std::max(mv, ov));
      }
    }
    out[i] = std::move(fused);
  }
  return out;
}

MemoryPyramid commit(const MemoryPyramid& mem, const std::array<FeatureMap, 4>& fused) {
  require_matching(mem.levels, fused, "commit");
  MemoryPyramid next;
  next.levels = fused;
  next.frame = mem.frame + 1;
  next.origin = MemoryOrigin::Autoregressive;
  return next;
}

MemoryPyramid refresh(const MemoryPyramid& mem,
                      const std::array<FeatureMap, 4>& foundation) {
  require_matching(mem.levels, foundation, "refresh");
  validate_pyramid(foundation, "refresh");
  MemoryPyramid next;
  next.levels = foundation;
  next.frame = mem.frame + 1;
  next.origin = MemoryOrigin::FoundationRefresh;
  return next;
}

FeatureMap decay_weight(const std::vector<ModulationField>& trust_history, int level) {
  if (trust_history.empty()) {
    throw InvalidArgumentError("decay_weight: empty trust history");
  }
  if (level < 1 || level > 4) {
    throw InvalidArgumentError("decay_weight: level must be in 1..4");
  }
  FeatureMap product = trust_history.front().level(level);
  for (std::size_t t = 1; t < trust_history.size(); ++t) {
    const FeatureMap& field = trust_history[t].level(level);
    if (!field.same_shape(product)) {
      throw InvalidArgumentError("decay_weight: field shape changes across history");
    }
    for (std::size_t i = 0; i < product.data.size(); ++i) {
      product.data[i] *= field.data[i];
    }
  }
  return product;
}

void save_memory_snapshot(const std::string& prefix, const MemoryPyramid& mem) {
  for (int l = 0; l < 4; ++l) {
    tensor_write(prefix + ".l" + std::to_string(l + 1) + ".amde", mem.levels[l]);
  }
}

MemoryPyramid load_memory_snapshot(const std::string& prefix) {
  std::vector<FeatureMap> levels;
  for (int l = 0; l < 4; ++l) {
    levels.push_back(read_feature_map(prefix + ".l" + std::to_string(l + 1) + ".amde"));
    levels.back().level = l + 1;
  }
  return init_memory(levels);
}

double fastpath_fraction(const ModulationField& trust, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgumentError("fastpath_fraction: threshold must be in (0,1)");
  }
  const FeatureMap& t1 = trust.level(1);
  if (t1.data.empty()) {
    throw InvalidArgumentError("fastpath_fraction: empty layer-1 field");
  }
  std::size_t below = 0;
  for (double v : t1.data) {
    if (v < threshold) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(t1.data.size());
}

}  // namespace amde
