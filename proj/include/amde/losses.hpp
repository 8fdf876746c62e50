#pragma once

#include "amde/tensor.hpp"

namespace amde {

struct LossConfig {
  double ssi_weight = 1.0;
  double grad_weight = 0.5;
  double mem_weight = 0.1;
  double tau = 0.4;          // soft lower bound on mean trust
  int scales = 4;
  double sigma_floor = 1e-8; // below this a map counts as degenerate

  void validate() const;
};

struct DepthLossResult {
  double value = 0.0;
  DepthMap grad;
};

struct TrustLossResult {
  double value = 0.0;
  FeatureMap grad;
};

struct TotalLossResult {
  double value = 0.0;
  DepthMap grad_pred;
  FeatureMap grad_trust;
};

// Mean/std normalization over the joint validity mask of the two maps.
// Exposed so callers (and tests) can feed grad_loss the same normalized
// maps the total loss uses.
struct NormalizedPair {
  DepthMap pred;  // (P - mu_P) / sigma_P on valid pixels, 0 elsewhere
  DepthMap gt;
  double mu_pred = 0.0, sigma_pred = 0.0;
  double mu_gt = 0.0, sigma_gt = 0.0;
  int valid_count = 0;
};
NormalizedPair normalize_pair(const DepthMap& pred, const DepthMap& gt,
                              double sigma_floor);

// Scale/shift-invariant loss: MSE between the mean/std-normalized maps.
// The gradient is exact, including the dependence of mu and sigma on the
// prediction. Degenerate (near-constant) inputs are rejected.
DepthLossResult ssi_loss(const DepthMap& pred, const DepthMap& gt,
                         double sigma_floor = 1e-8);

// Multi-scale edge loss on already-normalized maps: per scale s in 1..scales,
// the maps are downsampled by 2^(s-1) via 2x2 average pooling and the mean
// absolute forward-difference mismatch is accumulated with weight 1/s^2.
// The gradient uses sign(e) with sign(0) = 0.
DepthLossResult grad_loss(const DepthMap& pred_norm, const DepthMap& gt_norm,
                          int scales = 4);

// Hinge on the spatial mean of the layer-1 trust field:
// value = max(0, tau - mean(T)); the hinge is inactive at equality.
TrustLossResult mem_loss(const FeatureMap& trust_layer1, double tau);

// Weighted total. Normalizes once and feeds both depth terms; the
// prediction gradient is pulled back through the normalization.
TotalLossResult total_loss(const DepthMap& pred, const DepthMap& gt,
                           const FeatureMap& trust_layer1, const LossConfig& cfg);

}  // namespace amde
