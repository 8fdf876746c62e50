#include "amde/modulator.hpp"

#include <algorithm>
#include <cmath>

#include "amde/errors.hpp"

namespace amde {

namespace {

// Convex blend out = b + g * (a - b), clamped to the envelope of a and b so
// equal inputs pass through bit-exactly and the output never escapes them.
inline double blend(double a, double b, double g) {
  const double v = b + g * (a - b);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

void require_same_shape(const FeatureMap& a, const FeatureMap& b, const char* op) {
  if (!a.same_shape(b)) {
    throw InvalidArgumentError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

FeatureMap scale_trust(const FeatureMap& prev, const FeatureMap& curr,
                       const Conv3x3Params& h_params) {
  require_same_shape(prev, curr, "scale_trust");
  if (h_params.out_channels != 1) {
    throw InvalidArgumentError("scale_trust: gating net must emit one channel");
  }
  return sigmoid_map(conv2d_small(concat_channels(prev, curr), h_params));
}

FeatureMap semantic_gate(const FeatureMap& trust_l1, const FeatureMap& trust_l4,
                         double gate_temperature) {
  if (trust_l1.channels != 1 || trust_l4.channels != 1) {
    throw InvalidArgumentError("semantic_gate: trust fields must be single-channel");
  }
  const FeatureMap t4 = bilinear_resize(trust_l4, trust_l1.height, trust_l1.width);
  FeatureMap out(1, trust_l1.height, trust_l1.width, 1);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double g = sigmoid(gate_temperature * (t4.data[i] - 0.5));
    out.data[i] = blend(trust_l1.data[i], t4.data[i], g);
  }
  return out;
}

ModulationField distribute(const FeatureMap& trust_final,
                           const std::array<std::pair<int, int>, 4>& sizes) {
  if (trust_final.channels != 1) {
    throw InvalidArgumentError("distribute: trust field must be single-channel");
  }
  if (trust_final.height != sizes[0].first || trust_final.width != sizes[0].second) {
    throw InvalidArgumentError("distribute: field must be at the layer-1 size");
  }
  ModulationField field;
  field.levels[0] = trust_final;
  field.levels[0].level = 1;
  for (int l = 2; l <= 4; ++l) {
    field.levels[l - 1] =
        bilinear_resize(trust_final, sizes[l - 1].first, sizes[l - 1].second);
    field.levels[l - 1].level = l;
  }
  return field;
}

ModulationField smooth(const ModulationField& raw, SmoothingState& state, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw InvalidArgumentError("smooth: beta must be in (0,1]");
  }
  if (!state.seeded) {
    state.smoothed = raw.levels;
    state.seeded = true;
    return raw;
  }
  for (int i = 0; i < 4; ++i) {
    if (!raw.levels[i].same_shape(state.smoothed[i])) {
      throw InvalidArgumentError("smooth: level shape differs from state");
    }
  }
  if (beta == 1.0) {
    state.smoothed = raw.levels;
    return raw;
  }
  ModulationField out;
  for (int i = 0; i < 4; ++i) {
    const FeatureMap& r = raw.levels[i];
    const FeatureMap& p = state.smoothed[i];
    FeatureMap s = r;
    for (std::size_t j = 0; j < s.data.size(); ++j) {
      s.data[j] = blend(r.data[j], p.data[j], beta);
    }
    out.levels[i] = std::move(s);
  }
  state.smoothed = out.levels;
  return out;
}

FeatureMap reference_modulator(const FeatureMap& prev, const FeatureMap& curr,
                               double a, double b) {
  require_same_shape(prev, curr, "reference_modulator");
  FeatureMap out(1, prev.height, prev.width, prev.level);
  const int pixels = prev.height * prev.width;
  for (int p = 0; p < pixels; ++p) {
    double dist2 = 0.0;
    for (int c = 0; c < prev.channels; ++c) {
      const double d = prev.data[static_cast<std::size_t>(c) * pixels + p] -
                       curr.data[static_cast<std::size_t>(c) * pixels + p];
      dist2 += d * d;
    }
    out.data[p] = sigmoid(a - b * dist2);
  }
  return out;
}

}  // namespace amde
