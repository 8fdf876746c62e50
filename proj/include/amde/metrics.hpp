#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amde/tensor.hpp"

namespace amde {

// Closed-form least-squares affine alignment: returns a * pred + b
// minimizing the squared residual against gt over valid pixels.
struct Alignment {
  double scale = 1.0;
  double shift = 0.0;
};
Alignment align_lsq_params(const DepthMap& pred, const DepthMap& gt);
DepthMap align_lsq(const DepthMap& pred, const DepthMap& gt);

// All three expect aligned inputs with strictly positive gt on valid
// pixels. delta1 clamps the prediction to a 1e-6 floor before forming
// ratios (documented, not silent: negative or zero predictions count as
// gross outliers).
double absrel(const DepthMap& pred, const DepthMap& gt);
double rmse(const DepthMap& pred, const DepthMap& gt);
double delta1(const DepthMap& pred, const DepthMap& gt);

struct FrameMetrics {
  double absrel = 0.0;
  double rmse = 0.0;
  double delta1 = 0.0;
};

// Align then evaluate all three metrics at once.
FrameMetrics aligned_metrics(const DepthMap& pred, const DepthMap& gt);

// Per-lag accumulation over refresh cycles 0..bins-1. The cycle average is
// the count-weighted mean over bins, i.e. the plain mean over frames.
class LagProfile {
 public:
  explicit LagProfile(int bins);

  void accumulate(std::int64_t lag, const FrameMetrics& m, double mean_trust,
                  double fastpath_pct);
  int bins() const { return static_cast<int>(rows_.size()); }
  bool empty() const;

  struct Row {
    std::int64_t lag = 0;
    std::int64_t count = 0;
    double absrel = 0.0;
    double rmse = 0.0;
    double delta1 = 0.0;
    double mean_trust = 0.0;
    double fastpath_pct = 0.0;
  };

  // Per-lag mean rows (only bins with samples) followed by the weighted
  // cycle average; std::nullopt when nothing was accumulated.
  struct Summary {
    std::vector<Row> per_lag;
    Row cycle_average;
  };
  std::optional<Summary> summarize() const;

 private:
  std::vector<Row> rows_;  // running sums; count-weighted on summarize
};

// CSV emission: header lag,count,absrel,rmse,delta1,mean_t,fastpath_pct,
// one row per populated lag, then a final cycle_avg row. Floats use six
// significant digits.
std::string lag_profile_csv(const LagProfile& profile);

}  // namespace amde
