#include "amde/losses.hpp"

#include <cmath>
#include <vector>

#include "amde/errors.hpp"

namespace amde {

namespace {

void require_same_shape(const DepthMap& a, const DepthMap& b, const char* op) {
  if (a.height != b.height || a.width != b.width) {
    throw InvalidArgumentError(std::string(op) + ": shape mismatch");
  }
}

std::vector<std::uint8_t> joint_mask(const DepthMap& a, const DepthMap& b) {
  std::vector<std::uint8_t> mask(a.size(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = (a.valid(i) && b.valid(i)) ? 1 : 0;
  }
  return mask;
}

struct Moments {
  double mu = 0.0;
  double sigma = 0.0;
};

Moments masked_moments(const DepthMap& m, const std::vector<std::uint8_t>& mask,
                       int n, double sigma_floor, const char* label) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (mask[i]) sum += m.data[i];
  }
  const double mu = sum / n;
  double var = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (mask[i]) {
      const double d = m.data[i] - mu;
      var += d * d;
    }
  }
  const double sigma = std::sqrt(var / n);
  if (!(sigma > sigma_floor)) {
    throw DegenerateInputError(std::string(label) +
                               " is (near-)constant: std below floor");
  }
  return {mu, sigma};
}

// Pull a gradient w.r.t. the normalized values back to the raw map:
// d u_i / d p_j = [(delta_ij - 1/n) - u_i * u_j / n] / sigma.
DepthMap normalization_pullback(const DepthMap& normalized,
                                const std::vector<std::uint8_t>& mask, int n,
                                double sigma, const std::vector<double>& grad_norm) {
  double mean_w = 0.0, mean_wu = 0.0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (mask[i]) {
      mean_w += grad_norm[i];
      mean_wu += grad_norm[i] * normalized.data[i];
    }
  }
  mean_w /= n;
  mean_wu /= n;
  DepthMap grad(normalized.height, normalized.width);
  grad.validity.assign(mask.begin(), mask.end());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad.data[i] = mask[i]
        ? (grad_norm[i] - mean_w - normalized.data[i] * mean_wu) / sigma
        : 0.0;
  }
  return grad;
}

// 2x2 average pooling over valid pixels; a pooled pixel is valid when its
// block holds at least one valid source pixel. Odd trailing rows/columns
// are dropped.
DepthMap pool2(const DepthMap& src) {
  DepthMap out(src.height / 2, src.width / 2);
  out.validity.assign(out.size(), 0);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double sum = 0.0;
      int count = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const std::size_t idx =
              static_cast<std::size_t>(2 * y + dy) * src.width + (2 * x + dx);
          if (src.valid(idx)) {
            sum += src.data[idx];
            ++count;
          }
        }
      }
      const std::size_t o = static_cast<std::size_t>(y) * out.width + x;
      if (count > 0) {
        out.data[o] = sum / count;
        out.validity[o] = 1;
      }
    }
  }
  return out;
}

// Distribute a pooled-pixel gradient back onto its valid block members.
void pool2_backward(const DepthMap& src, const DepthMap& pooled_grad,
                    DepthMap& src_grad) {
  for (int y = 0; y < pooled_grad.height; ++y) {
    for (int x = 0; x < pooled_grad.width; ++x) {
      const std::size_t o = static_cast<std::size_t>(y) * pooled_grad.width + x;
      if (pooled_grad.data[o] == 0.0) continue;
      int count = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const std::size_t idx =
              static_cast<std::size_t>(2 * y + dy) * src.width + (2 * x + dx);
          if (src.valid(idx)) ++count;
        }
      }
      if (count == 0) continue;
      const double share = pooled_grad.data[o] / count;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const std::size_t idx =
              static_cast<std::size_t>(2 * y + dy) * src.width + (2 * x + dx);
          if (src.valid(idx)) src_grad.data[idx] += share;
        }
      }
    }
  }
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void LossConfig::validate() const {
  if (ssi_weight < 0.0 || grad_weight < 0.0 || mem_weight < 0.0) {
    throw InvalidArgumentError("LossConfig: weights must be >= 0");
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw InvalidArgumentError("LossConfig: tau must be in (0,1)");
  }
  if (scales < 1) throw InvalidArgumentError("LossConfig: scales must be >= 1");
  if (!(sigma_floor > 0.0)) {
    throw InvalidArgumentError("LossConfig: sigma floor must be > 0");
  }
}

NormalizedPair normalize_pair(const DepthMap& pred, const DepthMap& gt,
                              double sigma_floor) {
  require_same_shape(pred, gt, "normalize_pair");
  const auto mask = joint_mask(pred, gt);
  int n = 0;
  for (auto v : mask) n += v;
  if (n < 2) {
    throw InvalidArgumentError("normalize_pair: needs at least 2 valid pixels");
  }
  const Moments mp = masked_moments(pred, mask, n, sigma_floor, "prediction");
  const Moments mg = masked_moments(gt, mask, n, sigma_floor, "ground truth");

  NormalizedPair out;
  out.pred = DepthMap(pred.height, pred.width);
  out.gt = DepthMap(gt.height, gt.width);
  out.pred.validity.assign(mask.begin(), mask.end());
  out.gt.validity.assign(mask.begin(), mask.end());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      out.pred.data[i] = (pred.data[i] - mp.mu) / mp.sigma;
      out.gt.data[i] = (gt.data[i] - mg.mu) / mg.sigma;
    }
  }
  out.mu_pred = mp.mu;
  out.sigma_pred = mp.sigma;
  out.mu_gt = mg.mu;
  out.sigma_gt = mg.sigma;
  out.valid_count = n;
  return out;
}

DepthLossResult ssi_loss(const DepthMap& pred, const DepthMap& gt, double sigma_floor) {
  const NormalizedPair np = normalize_pair(pred, gt, sigma_floor);
  const int n = np.valid_count;
  double value = 0.0;
  std::vector<double> grad_norm(np.pred.size(), 0.0);
  for (std::size_t i = 0; i < np.pred.size(); ++i) {
    if (!np.pred.valid(i)) continue;
    const double e = np.pred.data[i] - np.gt.data[i];
    value += e * e;
    grad_norm[i] = 2.0 * e / n;
  }
  value /= n;

  DepthLossResult res;
  res.value = value;
  res.grad = normalization_pullback(np.pred, np.pred.validity, n, np.sigma_pred,
                                    grad_norm);
  return res;
}

DepthLossResult grad_loss(const DepthMap& pred_norm, const DepthMap& gt_norm,
                          int scales) {
  require_same_shape(pred_norm, gt_norm, "grad_loss");
  if (scales < 1) throw InvalidArgumentError("grad_loss: scales must be >= 1");
  const int min_side = 2 << (scales - 1);  // 2 * 2^(scales-1)
  if (pred_norm.height < min_side || pred_norm.width < min_side) {
    throw InvalidArgumentError("grad_loss: maps must be at least " +
                               std::to_string(min_side) + "x" + std::to_string(min_side) +
                               " for " + std::to_string(scales) + " scales");
  }

  // forward: keep the whole pyramid for the backward pass
  std::vector<DepthMap> preds{pred_norm};
  std::vector<DepthMap> gts{gt_norm};
  for (int s = 1; s < scales; ++s) {
    preds.push_back(pool2(preds.back()));
    gts.push_back(pool2(gts.back()));
  }

  double value = 0.0;
  std::vector<DepthMap> scale_grads(scales);
  for (int s = 0; s < scales; ++s) {
    const DepthMap& p = preds[s];
    const DepthMap& g = gts[s];
    DepthMap grad(p.height, p.width);
    const double w = 1.0 / ((s + 1.0) * (s + 1.0));

    double sum_x = 0.0;
    std::size_t n_x = 0;
    std::vector<std::pair<std::size_t, double>> contribs;
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x + 1 < p.width; ++x) {
        const std::size_t i0 = static_cast<std::size_t>(y) * p.width + x;
        const std::size_t i1 = i0 + 1;
        if (!(p.valid(i0) && p.valid(i1) && g.valid(i0) && g.valid(i1))) continue;
        const double e = (p.data[i1] - p.data[i0]) - (g.data[i1] - g.data[i0]);
        sum_x += std::abs(e);
        ++n_x;
        const double sg = sign(e);
        grad.data[i1] += sg;  // scaled by w / n_x below
        grad.data[i0] -= sg;
      }
    }
    if (n_x > 0) {
      value += w * sum_x / n_x;
      for (double& v : grad.data) v *= w / n_x;
    }

    DepthMap grad_y(p.height, p.width);
    double sum_y = 0.0;
    std::size_t n_y = 0;
    for (int y = 0; y + 1 < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const std::size_t i0 = static_cast<std::size_t>(y) * p.width + x;
        const std::size_t i1 = i0 + p.width;
        if (!(p.valid(i0) && p.valid(i1) && g.valid(i0) && g.valid(i1))) continue;
        const double e = (p.data[i1] - p.data[i0]) - (g.data[i1] - g.data[i0]);
        sum_y += std::abs(e);
        ++n_y;
        const double sg = sign(e);
        grad_y.data[i1] += sg;
        grad_y.data[i0] -= sg;
      }
    }
    if (n_y > 0) {
      value += w * sum_y / n_y;
      const double f = w / n_y;
      for (std::size_t i = 0; i < grad.size(); ++i) grad.data[i] += f * grad_y.data[i];
    }
    scale_grads[s] = std::move(grad);
  }

  // backward through the pooling chain, coarsest first
  for (int s = scales - 1; s > 0; --s) {
    pool2_backward(preds[s - 1], scale_grads[s], scale_grads[s - 1]);
  }

  DepthLossResult res;
  res.value = value;
  res.grad = std::move(scale_grads[0]);
  res.grad.validity = pred_norm.validity;
  return res;
}

TrustLossResult mem_loss(const FeatureMap& trust_layer1, double tau) {
  if (trust_layer1.channels != 1 || trust_layer1.data.empty()) {
    throw InvalidArgumentError("mem_loss: trust field must be single-channel, non-empty");
  }
  for (double v : trust_layer1.data) {
    if (!(v > 0.0 && v < 1.0)) {
      throw InvalidArgumentError("mem_loss: trust values must lie in (0,1)");
    }
  }
  const std::size_t n = trust_layer1.data.size();
  double mean = 0.0;
  for (double v : trust_layer1.data) mean += v;
  mean /= static_cast<double>(n);

  TrustLossResult res;
  res.grad = FeatureMap(1, trust_layer1.height, trust_layer1.width, trust_layer1.level);
  if (mean < tau) {
    res.value = tau - mean;
    const double g = -1.0 / static_cast<double>(n);
    for (double& v : res.grad.data) v = g;
  } else {
    res.value = 0.0;  // hinge inactive at and above the threshold
  }
  return res;
}

TotalLossResult total_loss(const DepthMap& pred, const DepthMap& gt,
                           const FeatureMap& trust_layer1, const LossConfig& cfg) {
  cfg.validate();
  const NormalizedPair np = normalize_pair(pred, gt, cfg.sigma_floor);
  const int n = np.valid_count;

  // SSI on the shared normalization
  double ssi_value = 0.0;
  std::vector<double> grad_norm(np.pred.size(), 0.0);
  for (std::size_t i = 0; i < np.pred.size(); ++i) {
    if (!np.pred.valid(i)) continue;
    const double e = np.pred.data[i] - np.gt.data[i];
    ssi_value += e * e;
    grad_norm[i] = cfg.ssi_weight * 2.0 * e / n;
  }
  ssi_value /= n;

  const DepthLossResult edges = grad_loss(np.pred, np.gt, cfg.scales);
  for (std::size_t i = 0; i < grad_norm.size(); ++i) {
    grad_norm[i] += cfg.grad_weight * edges.grad.data[i];
  }

  const TrustLossResult mem = mem_loss(trust_layer1, cfg.tau);

  TotalLossResult res;
  res.value = cfg.ssi_weight * ssi_value + cfg.grad_weight * edges.value +
              cfg.mem_weight * mem.value;
  res.grad_pred = normalization_pullback(np.pred, np.pred.validity, n,
                                         np.sigma_pred, grad_norm);
  res.grad_trust = mem.grad;
  for (double& v : res.grad_trust.data) v *= cfg.mem_weight;
  return res;
}

}  // namespace amde
