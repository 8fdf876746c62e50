#include "amde/synthworld.hpp"

#include <cmath>
#include <filesystem>

#include "amde/errors.hpp"
#include "amde/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amde;

namespace {

SceneConfig small_scene() {
  SceneConfig cfg;
  cfg.height = 64;
  cfg.width = 64;
  cfg.seed = 11;
  return cfg;
}

SceneConfig static_noiseless() {
  SceneConfig cfg = small_scene();
  cfg.drift_x = 0;
  cfg.drift_y = 0;
  cfg.object_count = 0;
  cfg.sigma_foundation = 0.0;
  cfg.sigma_encoder = 0.0;
  return cfg;
}

bool maps_equal(const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] != b.data[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("generate_sequence: identical seeds reproduce bit-identical sequences") {
  const SceneConfig cfg = small_scene();
  const auto a = generate_sequence(cfg, 4);
  const auto b = generate_sequence(cfg, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].ground_truth.size(); ++i) {
      CHECK(a[t].ground_truth.data[i] == b[t].ground_truth.data[i]);
    }
    for (int l = 0; l < 4; ++l) {
      CHECK(maps_equal(a[t].foundation[l], b[t].foundation[l]));
      CHECK(maps_equal(a[t].encoder[l], b[t].encoder[l]));
    }
  }
}

TEST_CASE("generate_sequence: static noiseless world repeats the first frame") {
  const auto seq = generate_sequence(static_noiseless(), 5);
  for (std::size_t t = 1; t < seq.size(); ++t) {
    for (std::size_t i = 0; i < seq[0].ground_truth.size(); ++i) {
      CHECK(seq[t].ground_truth.data[i] == seq[0].ground_truth.data[i]);
    }
    for (int l = 0; l < 4; ++l) {
      CHECK(maps_equal(seq[t].foundation[l], seq[0].foundation[l]));
    }
  }
  // with zero noise the two streams coincide
  for (const FrameBundle& b : seq) {
    for (int l = 0; l < 4; ++l) {
      CHECK(maps_equal(b.foundation[l], b.encoder[l]));
    }
  }
}

TEST_CASE("generate_sequence: camera drift shifts the static background exactly") {
  SceneConfig cfg = static_noiseless();
  cfg.drift_x = 2;
  cfg.drift_y = 0;
  const SynthWorld world(cfg);
  const DepthMap d0 = world.depth_frame(0);
  for (std::int64_t t : {1, 3, 7}) {
    const DepthMap dt = world.depth_frame(t);
    const int shift = static_cast<int>(2 * t) % cfg.width;
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const int sx = ((x - shift) % cfg.width + cfg.width) % cfg.width;
        CHECK(dt.at(y, x) == d0.at(y, sx));
      }
    }
  }
}

TEST_CASE("generate_sequence: drift shifts the background away from object tracks") {
  SceneConfig cfg = small_scene();
  cfg.drift_x = 2;
  cfg.drift_y = 1;
  cfg.object_count = 2;
  cfg.sigma_foundation = 0.0;
  cfg.sigma_encoder = 0.0;
  const SynthWorld world(cfg);
  const DepthMap d0 = world.depth_frame(0);
  const std::int64_t t = 5;
  const DepthMap dt = world.depth_frame(t);
  const int sx_shift = static_cast<int>(cfg.drift_x * t) % cfg.width;
  const int sy_shift = static_cast<int>(cfg.drift_y * t) % cfg.height;
  const auto boxes0 = world.object_boxes(0);
  const auto boxest = world.object_boxes(t);
  std::size_t compared = 0;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const int px = ((x - sx_shift) % cfg.width + cfg.width) % cfg.width;
      const int py = ((y - sy_shift) % cfg.height + cfg.height) % cfg.height;
      bool near_object = false;
      for (const ObjectBox& b : boxest) {
        if (box_contains(b, x, y, cfg.width, cfg.height)) near_object = true;
      }
      for (const ObjectBox& b : boxes0) {
        if (box_contains(b, px, py, cfg.width, cfg.height)) near_object = true;
      }
      if (near_object) continue;
      CHECK(dt.at(y, x) == d0.at(py, px));
      ++compared;
    }
  }
  CHECK(compared > static_cast<std::size_t>(cfg.height) * cfg.width / 2);
}

TEST_CASE("generate_sequence: objects paint their depth inside their boxes") {
  SceneConfig cfg = small_scene();
  cfg.object_count = 1;
  cfg.sigma_foundation = 0.0;
  cfg.sigma_encoder = 0.0;
  const SynthWorld world(cfg);
  const DepthMap d = world.depth_frame(3);
  const auto boxes = world.object_boxes(3);
  REQUIRE(boxes.size() == 1);
  std::size_t inside = 0;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      if (box_contains(boxes[0], x, y, cfg.width, cfg.height)) {
        CHECK(d.at(y, x) == boxes[0].depth);
        ++inside;
      }
    }
  }
  CHECK(inside == static_cast<std::size_t>(boxes[0].size) * boxes[0].size);
}

TEST_CASE("features: noiseless features equal the encoding of pooled descriptors") {
  const SceneConfig cfg = static_noiseless();
  const SynthWorld world(cfg);
  const FrameBundle bundle = world.frame(0);
  const Matrix& enc = world.encoding();
  const DepthMap& depth = bundle.ground_truth;

  // independent pooled-descriptor evaluation at level 2 (8x downsampling)
  const int p = 8;
  const int lh = cfg.height / p, lw = cfg.width / p;
  for (int by : {0, 3, lh - 1}) {
    for (int bx : {0, 2, lw - 1}) {
      double d0 = 0.0, d1 = 0.0, d2 = 0.0;
      for (int v = 0; v < p; ++v) {
        const double wy = 2.0 * (v + 0.5) / p - 1.0;
        for (int u = 0; u < p; ++u) {
          const double wx = 2.0 * (u + 0.5) / p - 1.0;
          const double d = depth.at(by * p + v, bx * p + u);
          d0 += d;
          d1 += d * wx;
          d2 += d * wy;
        }
      }
      d0 /= p * p;
      d1 /= p * p;
      d2 /= p * p;
      for (int c = 0; c < cfg.channels; ++c) {
        const double want = enc.at(c, 0) * d0 + enc.at(c, 1) * d1 + enc.at(c, 2) * d2;
        CHECK(bundle.foundation[1].at(c, by, bx) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("features: level sizes follow the 4x..32x pyramid") {
  const SynthWorld world(small_scene());
  const FrameBundle b = world.frame(0);
  const int factors[4] = {4, 8, 16, 32};
  for (int l = 0; l < 4; ++l) {
    CHECK(b.foundation[l].height == 64 / factors[l]);
    CHECK(b.foundation[l].width == 64 / factors[l]);
    CHECK(b.foundation[l].channels == 8);
    CHECK(b.encoder[l].height == 64 / factors[l]);
  }
}

TEST_CASE("decoder: left inverse reconstructs exact descriptors") {
  Rng rng(501);
  Matrix enc(8, 3);
  for (double& v : enc.data) v = rng.uniform(-1.0, 1.0);
  const Decoder decoder(enc, ReadoutParams{}, 32, 32);

  const FeatureMap desc = oracle::random_map(rng, 3, 4, 4);
  const FeatureMap features = pointwise_linear(desc, enc, std::vector<double>(8, 0.0));
  const FeatureMap recovered = decoder.apply_left_inverse(features);
  for (std::size_t i = 0; i < desc.data.size(); ++i) {
    CHECK(recovered.data[i] == doctest::Approx(desc.data[i]).epsilon(1e-9));
  }
}

TEST_CASE("decoder: scaling the features scales the decoded depth") {
  const SceneConfig cfg = static_noiseless();
  const SynthWorld world(cfg);
  const FrameBundle b = world.frame(0);
  const Decoder decoder(world.encoding(), ReadoutParams{}, cfg.height, cfg.width);
  const DepthMap base = decoder.decode(b.foundation);
  auto scaled = b.foundation;
  for (auto& level : scaled) {
    for (double& v : level.data) v *= 2.0;
  }
  const DepthMap twice = decoder.decode(scaled);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(twice.data[i] == doctest::Approx(2.0 * base.data[i]).epsilon(1e-11));
  }
}

TEST_CASE("decoder: noiseless foundation decode stays below the pooling floor") {
  const SceneConfig cfg = static_noiseless();
  const SynthWorld world(cfg);
  const FrameBundle b = world.frame(0);
  const Decoder decoder(world.encoding(), ReadoutParams{}, cfg.height, cfg.width);
  const DepthMap decoded = decoder.decode(b.foundation);
  const DepthMap aligned = align_lsq(decoded, b.ground_truth);
  // fixture: the pooling-induced floor, measured once over 30 static
  // noiseless seeds, tops out at absrel = 0.0081
  CHECK(absrel(aligned, b.ground_truth) < 0.009);
}

TEST_CASE("decoder: rank-deficient encoding is rejected at construction") {
  Matrix enc(8, 3);
  for (int c = 0; c < 8; ++c) {
    enc.at(c, 0) = 1.0;
    enc.at(c, 1) = 2.0;
    enc.at(c, 2) = 3.0;  // all rows parallel -> rank 1
  }
  CHECK_THROWS_AS(Decoder(enc, ReadoutParams{}, 32, 32), ConfigError);
}

TEST_CASE("decoder: level weights must sum to one") {
  Rng rng(502);
  Matrix enc(4, 3);
  for (double& v : enc.data) v = rng.uniform(-1.0, 1.0);
  ReadoutParams readout;
  readout.level_weights = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(Decoder(enc, readout, 32, 32), ConfigError);
}

TEST_CASE("foundation decode beats encoder decode on average across seeds") {
  double foundation_err = 0.0, encoder_err = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    SceneConfig cfg = small_scene();
    cfg.seed = 1000 + static_cast<std::uint64_t>(s);
    const SynthWorld world(cfg);
    const FrameBundle b = world.frame(0);
    const Decoder decoder(world.encoding(), ReadoutParams{}, cfg.height, cfg.width);
    const DepthMap df = decoder.decode(b.foundation);
    const DepthMap de = decoder.decode(b.encoder);
    foundation_err += absrel(align_lsq(df, b.ground_truth), b.ground_truth);
    encoder_err += absrel(align_lsq(de, b.ground_truth), b.ground_truth);
  }
  CHECK(foundation_err / seeds < encoder_err / seeds);
}

TEST_CASE("scene config validation") {
  SceneConfig cfg = small_scene();
  cfg.height = 100;  // not a multiple of 32
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
  cfg = small_scene();
  cfg.sigma_foundation = 0.2;
  cfg.sigma_encoder = 0.1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
  cfg = small_scene();
  cfg.channels = 2;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
  cfg = small_scene();
  cfg.sigma_foundation = 0.0;
  cfg.sigma_encoder = 0.0;
  cfg.validate();  // jointly zero noise is the static oracle case
}

TEST_CASE("generate_sequence: bad length is rejected") {
  CHECK_THROWS_AS(generate_sequence(small_scene(), 0), InvalidArgumentError);
}

TEST_CASE("sequence save/load round trip preserves content at f32 precision") {
  SceneConfig cfg = small_scene();
  const SequenceData data = make_sequence(cfg, 3);
  const auto dir = std::filesystem::temp_directory_path() / "amde_seq_roundtrip";
  std::filesystem::remove_all(dir);
  save_sequence(dir.string(), data);
  const SequenceData back = load_sequence(dir.string());
  REQUIRE(back.frames.size() == 3);
  CHECK(back.scene.height == cfg.height);
  CHECK(back.scene.seed == cfg.seed);
  CHECK(back.encoding.rows == data.encoding.rows);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t i = 0; i < data.frames[t].ground_truth.size(); ++i) {
      const float want = static_cast<float>(data.frames[t].ground_truth.data[i]);
      CHECK(back.frames[t].ground_truth.data[i] == static_cast<double>(want));
    }
    for (int l = 0; l < 4; ++l) {
      CHECK(back.frames[t].foundation[l].same_shape(data.frames[t].foundation[l]));
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("load_sequence: missing directory is an io error") {
  CHECK_THROWS_AS(load_sequence("/nonexistent/amde_seq"), IoError);
}
