#include "amde/projector.hpp"

#include "amde/errors.hpp"

namespace amde {

ProjectorParams ProjectorParams::identity(
    int channels, const std::array<std::pair<int, int>, 4>& sizes) {
  ProjectorParams p;
  p.memory_channels = channels;
  for (int i = 0; i < 4; ++i) {
    p.levels[i].weight = Matrix::identity(channels);
    p.levels[i].bias.assign(channels, 0.0);
    p.levels[i].target_h = sizes[i].first;
    p.levels[i].target_w = sizes[i].second;
  }
  return p;
}

FeatureMap project(int level, const FeatureMap& obs, const ProjectorParams& params) {
  if (level < 1 || level > 4) {
    throw InvalidArgumentError("project: level must be in 1..4, got " +
                               std::to_string(level));
  }
  const LevelProjector& lp = params.levels[level - 1];
  FeatureMap aligned = pointwise_linear(obs, lp.weight, lp.bias);
  FeatureMap out = bilinear_resize(aligned, lp.target_h, lp.target_w);
  out.level = level;
  return out;
}

void save_projector_level(const std::string& path, const LevelProjector& lp) {
  FeatureMap packed(lp.weight.rows, lp.weight.cols + 1, 1);
  for (int co = 0; co < lp.weight.rows; ++co) {
    for (int ci = 0; ci < lp.weight.cols; ++ci) {
      packed.at(co, ci, 0) = lp.weight.at(co, ci);
    }
    packed.at(co, lp.weight.cols, 0) = lp.bias[co];
  }
  tensor_write(path, packed);
}

LevelProjector load_projector_level(const std::string& path, int target_h, int target_w) {
  FeatureMap packed = read_feature_map(path);
  if (packed.width != 1 || packed.height < 2) {
    throw FormatError("load_projector_level: expected dims (C_out, C_in + 1, 1) in " + path);
  }
  LevelProjector lp;
  lp.weight = Matrix(packed.channels, packed.height - 1);
  lp.bias.assign(packed.channels, 0.0);
  for (int co = 0; co < packed.channels; ++co) {
    for (int ci = 0; ci < packed.height - 1; ++ci) {
      lp.weight.at(co, ci) = packed.at(co, ci, 0);
    }
    lp.bias[co] = packed.at(co, packed.height - 1, 0);
  }
  lp.target_h = target_h;
  lp.target_w = target_w;
  return lp;
}

}  // namespace amde
