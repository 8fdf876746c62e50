#include "amde/metrics.hpp"

#include <cmath>

#include "amde/errors.hpp"
#include "amde/synthworld.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amde;

TEST_CASE("align_lsq: identical maps give scale 1, shift 0") {
  Rng rng(601);
  const DepthMap g = oracle::random_depth(rng, 8, 8);
  const Alignment a = align_lsq_params(g, g);
  CHECK(a.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.shift == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("align_lsq: inverts a known affine relation with zero residual") {
  Rng rng(602);
  const DepthMap g = oracle::random_depth(rng, 8, 8);
  DepthMap p = g;
  for (double& v : p.data) v = (v - 3.0) / 2.0;
  const Alignment a = align_lsq_params(p, g);
  CHECK(a.scale == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(a.shift == doctest::Approx(3.0).epsilon(1e-10));
  const DepthMap aligned = align_lsq(p, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(aligned.data[i] == doctest::Approx(g.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("align_lsq: matches the normal-equation oracle on random pairs") {
  Rng rng(603);
  for (int trial = 0; trial < 10; ++trial) {
    const DepthMap p = oracle::random_depth(rng, 8, 8);
    const DepthMap g = oracle::random_depth(rng, 8, 8);
    const Alignment a = align_lsq_params(p, g);
    const auto [wa, wb] = oracle::affine_fit(p, g);
    CHECK(a.scale == doctest::Approx(wa).epsilon(1e-10));
    CHECK(a.shift == doctest::Approx(wb).epsilon(1e-10));
  }
}

TEST_CASE("align_lsq: residual is optimal against random candidates") {
  Rng rng(604);
  const DepthMap p = oracle::random_depth(rng, 8, 8);
  const DepthMap g = oracle::random_depth(rng, 8, 8);
  const Alignment a = align_lsq_params(p, g);
  auto residual = [&](double s, double b) {
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = s * p.data[i] + b - g.data[i];
      r += d * d;
    }
    return r;
  };
  const double best = residual(a.scale, a.shift);
  for (int k = 0; k < 100; ++k) {
    const double s = a.scale + rng.uniform(-1.0, 1.0);
    const double b = a.shift + rng.uniform(-1.0, 1.0);
    CHECK(best <= residual(s, b) + 1e-12);
  }
}

TEST_CASE("align_lsq: constant prediction cannot be aligned") {
  Rng rng(605);
  DepthMap p(4, 4);
  std::fill(p.data.begin(), p.data.end(), 2.0);
  const DepthMap g = oracle::random_depth(rng, 4, 4);
  CHECK_THROWS_AS(align_lsq(p, g), DegenerateInputError);
}

TEST_CASE("metrics: perfect prediction") {
  Rng rng(606);
  const DepthMap g = oracle::random_depth(rng, 8, 8, 0.2, 1.0);
  CHECK(absrel(g, g) == 0.0);
  CHECK(rmse(g, g) == 0.0);
  CHECK(delta1(g, g) == 1.0);
}

TEST_CASE("metrics: delta1 threshold boundary") {
  DepthMap gt(1, 1);
  gt.data[0] = 1.0;
  DepthMap pred(1, 1);
  pred.data[0] = 1.2;
  CHECK(delta1(pred, gt) == 1.0);  // ratio 1.2 < 1.25
  pred.data[0] = 1.3;
  CHECK(delta1(pred, gt) == 0.0);  // ratio 1.3 >= 1.25
}

TEST_CASE("metrics: match brute-force loop oracles on random pairs") {
  Rng rng(607);
  for (int trial = 0; trial < 50; ++trial) {
    const DepthMap g = oracle::random_depth(rng, 16, 16, 0.2, 1.2);
    DepthMap p = g;
    for (double& v : p.data) v += rng.uniform(-0.2, 0.2);
    const oracle::MetricOracle want = oracle::metrics(p, g);
    CHECK(std::abs(absrel(p, g) - want.absrel) < 1e-12);
    CHECK(std::abs(rmse(p, g) - want.rmse) < 1e-12);
    CHECK(std::abs(delta1(p, g) - want.delta1) < 1e-12);
  }
}

TEST_CASE("metrics: delta1 symmetric under swapping prediction and ground truth") {
  Rng rng(608);
  const DepthMap a = oracle::random_depth(rng, 8, 8, 0.3, 1.0);
  const DepthMap b = oracle::random_depth(rng, 8, 8, 0.3, 1.0);
  CHECK(delta1(a, b) == delta1(b, a));
}

TEST_CASE("metrics: invariant to garbage in masked-out pixels") {
  Rng rng(609);
  DepthMap g = oracle::random_depth(rng, 8, 8, 0.2, 1.0);
  DepthMap p = oracle::random_depth(rng, 8, 8, 0.2, 1.0);
  g.validity.assign(g.size(), 1);
  for (int i = 0; i < 10; ++i) g.validity[i * 3] = 0;
  const double a0 = absrel(p, g), r0 = rmse(p, g), d0 = delta1(p, g);
  for (int i = 0; i < 10; ++i) {
    g.data[i * 3] = 1e9;
    p.data[i * 3] = -1e9;
  }
  CHECK(absrel(p, g) == a0);
  CHECK(rmse(p, g) == r0);
  CHECK(delta1(p, g) == d0);
}

TEST_CASE("metrics: empty valid set is rejected") {
  DepthMap g(2, 2);
  DepthMap p(2, 2);
  g.validity.assign(4, 0);
  CHECK_THROWS_AS(absrel(p, g), InvalidArgumentError);
  CHECK_THROWS_AS(rmse(p, g), InvalidArgumentError);
  CHECK_THROWS_AS(delta1(p, g), InvalidArgumentError);
}

TEST_CASE("lag profile: one frame per lag averages to (N-1)/2") {
  const int n = 6;
  LagProfile profile(n);
  for (int lag = 0; lag < n; ++lag) {
    FrameMetrics m;
    m.absrel = static_cast<double>(lag);
    profile.accumulate(lag, m, 0.5, 0.1);
  }
  const auto summary = profile.summarize();
  REQUIRE(summary.has_value());
  CHECK(summary->cycle_average.absrel == doctest::Approx((n - 1) / 2.0).epsilon(1e-12));
  CHECK(summary->per_lag.size() == n);
}

TEST_CASE("lag profile: empty profile summarizes to nothing") {
  const LagProfile profile(4);
  CHECK(!profile.summarize().has_value());
  CHECK(profile.empty());
}

TEST_CASE("lag profile: uneven bin counts use the count-weighted mean") {
  LagProfile profile(2);
  FrameMetrics m;
  m.absrel = 1.0;
  profile.accumulate(0, m, 0.0, 0.0);
  profile.accumulate(0, m, 0.0, 0.0);
  profile.accumulate(0, m, 0.0, 0.0);
  m.absrel = 5.0;
  profile.accumulate(1, m, 0.0, 0.0);
  const auto summary = profile.summarize();
  REQUIRE(summary.has_value());
  // (3*1 + 1*5) / 4
  CHECK(summary->cycle_average.absrel == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("lag profile: out-of-range lag is rejected") {
  LagProfile profile(3);
  FrameMetrics m;
  CHECK_THROWS_AS(profile.accumulate(3, m, 0.0, 0.0), InvalidArgumentError);
  CHECK_THROWS_AS(profile.accumulate(-1, m, 0.0, 0.0), InvalidArgumentError);
}

TEST_CASE("lag profile csv: header, per-lag rows, trailing cycle average") {
  LagProfile profile(2);
  FrameMetrics m;
  m.absrel = 0.123456789;
  m.rmse = 0.5;
  m.delta1 = 1.0;
  profile.accumulate(0, m, 0.9, 0.05);
  profile.accumulate(1, m, 0.8, 0.10);
  const std::string csv = lag_profile_csv(profile);
  CHECK(csv.find("lag,count,absrel,rmse,delta1,mean_t,fastpath_pct\n") == 0);
  CHECK(csv.find("cycle_avg,2,") != std::string::npos);
  CHECK(csv.find("0.123457") != std::string::npos);  // six significant digits
}
