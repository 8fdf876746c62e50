#include "amde/projector.hpp"

#include <filesystem>

#include "amde/errors.hpp"
#include "amde/synthworld.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amde;

namespace {

ProjectorParams random_params(Rng& rng, int mem_channels, int in_channels) {
  ProjectorParams p;
  p.memory_channels = mem_channels;
  const std::array<std::pair<int, int>, 4> sizes = {{{8, 8}, {4, 4}, {2, 2}, {1, 1}}};
  for (int l = 0; l < 4; ++l) {
    p.levels[l].weight = Matrix(mem_channels, in_channels);
    for (double& v : p.levels[l].weight.data) v = rng.uniform(-1.0, 1.0);
    p.levels[l].bias.resize(mem_channels);
    for (double& v : p.levels[l].bias) v = rng.uniform(-0.5, 0.5);
    p.levels[l].target_h = sizes[l].first;
    p.levels[l].target_w = sizes[l].second;
  }
  return p;
}

}  // namespace

TEST_CASE("project: identity weights at the target size pass through") {
  Rng rng(101);
  const std::array<std::pair<int, int>, 4> sizes = {{{6, 6}, {3, 3}, {2, 2}, {1, 1}}};
  const ProjectorParams p = ProjectorParams::identity(3, sizes);
  const FeatureMap obs = oracle::random_map(rng, 3, 6, 6);
  const FeatureMap out = project(1, obs, p);
  for (std::size_t i = 0; i < obs.data.size(); ++i) {
    CHECK(out.data[i] == obs.data[i]);
  }
}

TEST_CASE("project: constant input maps to the constant W*c + b") {
  Rng rng(102);
  const ProjectorParams p = random_params(rng, 2, 3);
  FeatureMap obs(3, 5, 7);
  const double c0 = 0.3, c1 = -1.2, c2 = 0.8;
  for (int i = 0; i < 35; ++i) {
    obs.data[i] = c0;
    obs.data[35 + i] = c1;
    obs.data[70 + i] = c2;
  }
  const FeatureMap out = project(2, obs, p);
  REQUIRE(out.height == 4);
  REQUIRE(out.width == 4);
  for (int co = 0; co < 2; ++co) {
    const double expected = p.levels[1].weight.at(co, 0) * c0 +
                            p.levels[1].weight.at(co, 1) * c1 +
                            p.levels[1].weight.at(co, 2) * c2 + p.levels[1].bias[co];
    for (int i = 0; i < 16; ++i) {
      CHECK(out.data[static_cast<std::size_t>(co) * 16 + i] ==
            doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("project: matches the composed channel-map + resize oracles") {
  Rng rng(103);
  const ProjectorParams p = random_params(rng, 2, 3);
  const FeatureMap obs = oracle::random_map(rng, 3, 9, 5);
  for (int level = 1; level <= 4; ++level) {
    const FeatureMap got = project(level, obs, p);
    const LevelProjector& lp = p.levels[level - 1];
    const FeatureMap want = oracle::resize2d(oracle::matvec(obs, lp.weight, lp.bias),
                                             lp.target_h, lp.target_w);
    REQUIRE(got.data.size() == want.data.size());
    for (std::size_t i = 0; i < got.data.size(); ++i) {
      CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("project: output size tracks the configured level size") {
  Rng rng(104);
  const ProjectorParams p = random_params(rng, 2, 3);
  for (int h : {3, 8, 17}) {
    const FeatureMap obs = oracle::random_map(rng, 3, h, h);
    for (int level = 1; level <= 4; ++level) {
      const FeatureMap out = project(level, obs, p);
      CHECK(out.height == p.levels[level - 1].target_h);
      CHECK(out.width == p.levels[level - 1].target_w);
      CHECK(out.channels == 2);
    }
  }
}

TEST_CASE("project: linear in the observation for zero bias") {
  Rng rng(105);
  ProjectorParams p = random_params(rng, 2, 2);
  for (auto& lp : p.levels) std::fill(lp.bias.begin(), lp.bias.end(), 0.0);
  const FeatureMap x = oracle::random_map(rng, 2, 6, 6);
  const FeatureMap y = oracle::random_map(rng, 2, 6, 6);
  FeatureMap combo(2, 6, 6);
  const double a = 1.5, b = -0.5;
  for (std::size_t i = 0; i < combo.data.size(); ++i) {
    combo.data[i] = a * x.data[i] + b * y.data[i];
  }
  const FeatureMap lhs = project(1, combo, p);
  const FeatureMap px = project(1, x, p);
  const FeatureMap py = project(1, y, p);
  for (std::size_t i = 0; i < lhs.data.size(); ++i) {
    CHECK(lhs.data[i] == doctest::Approx(a * px.data[i] + b * py.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("project: unknown level and channel mismatch are rejected") {
  Rng rng(106);
  const ProjectorParams p = random_params(rng, 2, 3);
  const FeatureMap obs = oracle::random_map(rng, 3, 4, 4);
  CHECK_THROWS_AS(project(0, obs, p), InvalidArgumentError);
  CHECK_THROWS_AS(project(5, obs, p), InvalidArgumentError);
  const FeatureMap bad = oracle::random_map(rng, 2, 4, 4);
  CHECK_THROWS_AS(project(1, bad, p), InvalidArgumentError);
}

TEST_CASE("projector params: level file round trip") {
  Rng rng(107);
  const ProjectorParams p = random_params(rng, 2, 3);
  const auto path = std::filesystem::temp_directory_path() / "amde_proj_level.amde";
  save_projector_level(path.string(), p.levels[0]);
  const LevelProjector back = load_projector_level(path.string(), p.levels[0].target_h,
                                                   p.levels[0].target_w);
  REQUIRE(back.weight.rows == 2);
  REQUIRE(back.weight.cols == 3);
  for (int co = 0; co < 2; ++co) {
    for (int ci = 0; ci < 3; ++ci) {
      CHECK(back.weight.at(co, ci) ==
            doctest::Approx(p.levels[0].weight.at(co, ci)).epsilon(1e-7));
    }
    CHECK(back.bias[co] == doctest::Approx(p.levels[0].bias[co]).epsilon(1e-7));
  }
  std::filesystem::remove(path);
}
