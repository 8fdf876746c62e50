#pragma once

#include <array>
#include <string>
#include <vector>

#include "amde/tensor.hpp"

namespace amde {

// Per-level channel alignment followed by spatial alignment onto the
// memory grid: project(x) = resize(W * x + b, target size).
struct LevelProjector {
  Matrix weight;              // memory_channels x input_channels
  std::vector<double> bias;   // memory_channels
  int target_h = 0;
  int target_w = 0;
};

struct ProjectorParams {
  std::array<LevelProjector, 4> levels;
  int memory_channels = 0;

  // Identity projector: input channels == memory channels, zero bias.
  static ProjectorParams identity(int channels,
                                  const std::array<std::pair<int, int>, 4>& sizes);
};

FeatureMap project(int level, const FeatureMap& obs, const ProjectorParams& params);

// One file per level in the binary tensor format: a 3-dim tensor with
// dims (C_out, C_in + 1, 1); per output channel, C_in weights followed
// by the bias in the final row.
void save_projector_level(const std::string& path, const LevelProjector& lp);
LevelProjector load_projector_level(const std::string& path, int target_h, int target_w);

}  // namespace amde
