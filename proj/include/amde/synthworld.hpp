#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amde/tensor.hpp"

namespace amde {

// Deterministic synthetic scene: a smooth periodic inverse-depth terrain
// advected by integer camera drift, plus rectangular foreground objects
// with their own motion and distinct depth offsets. Two feature streams
// observe the same linear encoding of local depth statistics and differ
// only in noise level (the foundation stream is the cleaner one).
struct SceneConfig {
  int height = 128;
  int width = 128;
  std::uint64_t seed = 1;
  int drift_x = 1;             // camera drift, px/frame, wraparound
  int drift_y = 0;
  int object_count = 2;
  int object_size = 24;        // square side, px
  double object_speed = 1.5;   // px/frame relative to the background
  double sigma_foundation = 0.004;
  double sigma_encoder = 0.09;
  int channels = 8;            // feature channels of both streams

  void validate() const;
};

struct FrameBundle {
  std::int64_t frame = 0;
  DepthMap ground_truth;                  // inverse depth, H x W
  std::array<FeatureMap, 4> foundation;   // clean stream, 4x..32x downsampled
  std::array<FeatureMap, 4> encoder;      // noisy stream, same grid
};

struct ObjectBox {
  double x = 0.0, y = 0.0;  // top-left, wraps around the frame
  int size = 0;
  double depth = 0.0;       // inverse depth drawn inside the box
};

bool box_contains(const ObjectBox& box, int px, int py, int width, int height);

class SynthWorld {
 public:
  explicit SynthWorld(const SceneConfig& cfg);

  const SceneConfig& config() const { return cfg_; }
  std::array<std::pair<int, int>, 4> level_sizes() const;
  const Matrix& encoding() const { return encoding_; }  // channels x 3

  DepthMap depth_frame(std::int64_t t) const;
  std::vector<ObjectBox> object_boxes(std::int64_t t) const;
  FrameBundle frame(std::int64_t t) const;
  std::vector<FrameBundle> generate(std::int64_t length) const;

 private:
  struct Wave {
    double amplitude = 0.0;
    int freq_x = 0, freq_y = 0;
    double phase = 0.0;
  };
  struct ObjectTrack {
    double x0 = 0.0, y0 = 0.0;
    double vx = 0.0, vy = 0.0;
    int size = 0;
    double depth = 0.0;
  };

  double terrain(int x, int y) const;
  std::array<FeatureMap, 4> features(const DepthMap& depth, std::int64_t t,
                                     int stream_tag, double sigma) const;

  SceneConfig cfg_;
  double base_ = 0.5;
  std::vector<Wave> waves_;
  std::vector<ObjectTrack> objects_;
  Matrix encoding_;
};

std::vector<FrameBundle> generate_sequence(const SceneConfig& cfg, std::int64_t length);

// ---------------------------------------------------------------------------
// Linear readout decoder: recover the pooled inverse-depth descriptor with
// the left-inverse of the encoding matrix, upsample every level to full
// resolution, and average with fixed per-level weights summing to 1.
// ---------------------------------------------------------------------------

struct ReadoutParams {
  std::array<double, 4> level_weights{0.4, 0.3, 0.2, 0.1};
};

class Decoder {
 public:
  // Throws ConfigError when the encoding is rank-deficient or the weights
  // do not sum to 1.
  Decoder(const Matrix& encoding, const ReadoutParams& readout, int out_h, int out_w);

  // 3 x h x w descriptor recovery (exact left-inverse of the encoding).
  FeatureMap apply_left_inverse(const FeatureMap& features) const;
  DepthMap decode(const std::array<FeatureMap, 4>& fused) const;

  int out_height() const { return out_h_; }
  int out_width() const { return out_w_; }

 private:
  Matrix left_inverse_;  // 3 x channels
  ReadoutParams readout_;
  int out_h_ = 0, out_w_ = 0;
};

DepthMap linear_decode(const std::array<FeatureMap, 4>& fused, const Decoder& decoder);

// ---------------------------------------------------------------------------
// Disk replay: a directory of tensor files plus a plain-text manifest. The
// encoding matrix travels with the sequence so a decoder can be rebuilt.
// ---------------------------------------------------------------------------

struct SequenceData {
  SceneConfig scene;
  Matrix encoding;  // channels x 3
  std::vector<FrameBundle> frames;
};

SequenceData make_sequence(const SceneConfig& cfg, std::int64_t length);
void save_sequence(const std::string& dir, const SequenceData& data);
SequenceData load_sequence(const std::string& dir);

// Deterministic keyed random stream (splitmix64 core, Box-Muller normals);
// every (seed, tag, frame, level) tuple addresses an independent stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  static Rng keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

  std::uint64_t next();
  double uniform();                      // [0,1)
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);       // inclusive bounds
  double gaussian();

 private:
  std::uint64_t state_;
};

}  // namespace amde
