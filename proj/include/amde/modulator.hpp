#pragma once

#include <array>

#include "amde/tensor.hpp"

namespace amde {

// Per-level trust fields T in (0,1), one channel each. T -> 1 keeps memory,
// T -> 0 injects the current observation. Level 1 carries the native field;
// levels 2..4 are interpolations of it.
struct ModulationField {
  std::array<FeatureMap, 4> levels;

  FeatureMap& level(int l) { return levels[l - 1]; }
  const FeatureMap& level(int l) const { return levels[l - 1]; }
};

// Exponential smoothing state for the trust fields, keyed by level.
// Empty until the first smooth() call seeds it.
struct SmoothingState {
  std::array<FeatureMap, 4> smoothed;
  bool seeded = false;
};

struct ModulatorConfig {
  double gate_temperature = 4.0;  // k
  double smoothing_beta = 0.5;    // in (0,1]
  Conv3x3Params h1;               // gating net for layer 1 (2*C -> 1)
  Conv3x3Params h4;               // gating net for layer 4 (2*C -> 1)
};

// sigma(conv3x3(concat(prev, curr))) with a single output channel.
FeatureMap scale_trust(const FeatureMap& prev, const FeatureMap& curr,
                       const Conv3x3Params& h_params);

// Blend the fine and semantic trust fields. The semantic field is first
// interpolated to layer-1 resolution; the gate g = sigma(k * (T4 - 0.5))
// selects the fine field where the semantic trust is high.
FeatureMap semantic_gate(const FeatureMap& trust_l1, const FeatureMap& trust_l4,
                         double gate_temperature);

// Level 1 gets the field itself; coarser levels get interpolations of it.
ModulationField distribute(const FeatureMap& trust_final,
                           const std::array<std::pair<int, int>, 4>& sizes);

// T'_t = beta * T_t + (1 - beta) * T'_{t-1}, per level. The first call
// returns the raw field and seeds the state.
ModulationField smooth(const ModulationField& raw, SmoothingState& state, double beta);

// Deterministic stand-in for the trained gating networks:
// T = sigma(a - b * ||p - c||^2) on the per-pixel channel vectors.
// Symmetric in its inputs and monotone decreasing in feature distance.
FeatureMap reference_modulator(const FeatureMap& prev, const FeatureMap& curr,
                               double a, double b);

}  // namespace amde
