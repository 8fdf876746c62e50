#include "amde/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "amde/errors.hpp"

namespace amde {

namespace {

constexpr double kPredFloor = 1e-6;

void require_same_shape(const DepthMap& a, const DepthMap& b, const char* op) {
  if (a.height != b.height || a.width != b.width) {
    throw InvalidArgumentError(std::string(op) + ": shape mismatch");
  }
}

struct ValidIter {
  const DepthMap& pred;
  const DepthMap& gt;
  template <typename F>
  std::size_t for_each(F&& f) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred.valid(i) && gt.valid(i)) {
        f(pred.data[i], gt.data[i]);
        ++n;
      }
    }
    return n;
  }
};

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

Alignment align_lsq_params(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt, "align_lsq");
  double sp = 0.0, sg = 0.0;
  std::size_t n = ValidIter{pred, gt}.for_each([&](double p, double g) {
    sp += p;
    sg += g;
  });
  if (n < 2) throw InvalidArgumentError("align_lsq: needs at least 2 valid pixels");
  const double mp = sp / n;
  const double mg = sg / n;
  double var_p = 0.0, cov = 0.0;
  ValidIter{pred, gt}.for_each([&](double p, double g) {
    var_p += (p - mp) * (p - mp);
    cov += (p - mp) * (g - mg);
  });
  if (!(var_p > 1e-24)) {
    throw DegenerateInputError("align_lsq: constant prediction cannot be aligned");
  }
  Alignment a;
  a.scale = cov / var_p;
  a.shift = mg - a.scale * mp;
  return a;
}

DepthMap align_lsq(const DepthMap& pred, const DepthMap& gt) {
  const Alignment a = align_lsq_params(pred, gt);
  DepthMap out = pred;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = a.scale * pred.data[i] + a.shift;
  }
  return out;
}

double absrel(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt, "absrel");
  double sum = 0.0;
  const std::size_t n = ValidIter{pred, gt}.for_each([&](double p, double g) {
    if (!(g > 0.0)) {
      throw InvalidArgumentError("absrel: ground truth must be strictly positive");
    }
    sum += std::abs(p - g) / g;
  });
  if (n == 0) throw InvalidArgumentError("absrel: no valid pixels");
  return sum / static_cast<double>(n);
}

double rmse(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt, "rmse");
  double sum = 0.0;
  const std::size_t n = ValidIter{pred, gt}.for_each([&](double p, double g) {
    sum += (p - g) * (p - g);
  });
  if (n == 0) throw InvalidArgumentError("rmse: no valid pixels");
  return std::sqrt(sum / static_cast<double>(n));
}

double delta1(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt, "delta1");
  std::size_t in = 0;
  const std::size_t n = ValidIter{pred, gt}.for_each([&](double p, double g) {
    if (!(g > 0.0)) {
      throw InvalidArgumentError("delta1: ground truth must be strictly positive");
    }
    const double pc = p > kPredFloor ? p : kPredFloor;
    const double ratio = pc > g ? pc / g : g / pc;
    if (ratio < 1.25) ++in;
  });
  if (n == 0) throw InvalidArgumentError("delta1: no valid pixels");
  return static_cast<double>(in) / static_cast<double>(n);
}

FrameMetrics aligned_metrics(const DepthMap& pred, const DepthMap& gt) {
  const DepthMap aligned = align_lsq(pred, gt);
  FrameMetrics m;
  m.absrel = absrel(aligned, gt);
  m.rmse = rmse(aligned, gt);
  m.delta1 = delta1(aligned, gt);
  return m;
}

LagProfile::LagProfile(int bins) {
  if (bins < 1) throw InvalidArgumentError("LagProfile: bins must be >= 1");
  rows_.resize(bins);
  for (int i = 0; i < bins; ++i) rows_[i].lag = i;
}

void LagProfile::accumulate(std::int64_t lag, const FrameMetrics& m, double mean_trust,
                            double fastpath_pct) {
  if (lag < 0 || lag >= static_cast<std::int64_t>(rows_.size())) {
    throw InvalidArgumentError("LagProfile: lag " + std::to_string(lag) +
                               " out of range [0," + std::to_string(rows_.size()) + ")");
  }
  Row& r = rows_[lag];
  r.count += 1;
  r.absrel += m.absrel;
  r.rmse += m.rmse;
  r.delta1 += m.delta1;
  r.mean_trust += mean_trust;
  r.fastpath_pct += fastpath_pct;
}

bool LagProfile::empty() const {
  for (const Row& r : rows_) {
    if (r.count > 0) return false;
  }
  return true;
}

std::optional<LagProfile::Summary> LagProfile::summarize() const {
  if (empty()) return std::nullopt;
  Summary s;
  Row total;
  std::int64_t total_count = 0;
  for (const Row& r : rows_) {
    if (r.count == 0) continue;
    Row mean = r;
    const double inv = 1.0 / static_cast<double>(r.count);
    mean.absrel *= inv;
    mean.rmse *= inv;
    mean.delta1 *= inv;
    mean.mean_trust *= inv;
    mean.fastpath_pct *= inv;
    s.per_lag.push_back(mean);

    total.absrel += r.absrel;
    total.rmse += r.rmse;
    total.delta1 += r.delta1;
    total.mean_trust += r.mean_trust;
    total.fastpath_pct += r.fastpath_pct;
    total_count += r.count;
  }
  const double inv = 1.0 / static_cast<double>(total_count);
  total.lag = -1;
  total.count = total_count;
  total.absrel *= inv;
  total.rmse *= inv;
  total.delta1 *= inv;
  total.mean_trust *= inv;
  total.fastpath_pct *= inv;
  s.cycle_average = total;
  return s;
}

std::string lag_profile_csv(const LagProfile& profile) {
  std::string out = "lag,count,absrel,rmse,delta1,mean_t,fastpath_pct\n";
  const auto summary = profile.summarize();
  if (!summary) return out;
  for (const LagProfile::Row& r : summary->per_lag) {
    out += std::to_string(r.lag) + "," + std::to_string(r.count) + "," +
           format6(r.absrel) + "," + format6(r.rmse) + "," + format6(r.delta1) + "," +
           format6(r.mean_trust) + "," + format6(r.fastpath_pct) + "\n";
  }
  const LagProfile::Row& c = summary->cycle_average;
  out += "cycle_avg," + std::to_string(c.count) + "," + format6(c.absrel) + "," +
         format6(c.rmse) + "," + format6(c.delta1) + "," + format6(c.mean_trust) + "," +
         format6(c.fastpath_pct) + "\n";
  return out;
}

}  // namespace amde
