#include "amde/synthworld.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amde/errors.hpp"

namespace fs = std::filesystem;

namespace amde {

namespace {

constexpr double kPi = 3.14159265358979323846;

constexpr std::uint64_t kTagScene = 0x5343454eULL;       // scene structure
constexpr std::uint64_t kTagFoundation = 0x464f554eULL;  // foundation noise
constexpr std::uint64_t kTagEncoder = 0x454e434fULL;     // encoder noise

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline int wrap(int v, int n) {
  v %= n;
  return v < 0 ? v + n : v;
}

// pool factors for the four levels: 4x, 8x, 16x, 32x
constexpr int kPoolFactor[4] = {4, 8, 16, 32};

}  // namespace

Rng Rng::keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t s = mix64(seed + 0x9E3779B97F4A7C15ULL);
  s = mix64(s ^ (a + 0xC2B2AE3D27D4EB4FULL));
  s = mix64(s ^ (b + 0x165667B19E3779F9ULL));
  s = mix64(s ^ (c + 0x27D4EB2F165667C5ULL));
  return Rng(s);
}

std::uint64_t Rng::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

double Rng::gaussian() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

void SceneConfig::validate() const {
  if (height < 32 || width < 32 || height % 32 != 0 || width % 32 != 0) {
    throw InvalidArgumentError(
        "SceneConfig: frame size must be a positive multiple of 32 (got " +
        std::to_string(height) + "x" + std::to_string(width) + ")");
  }
  if (channels < 3) {
    throw InvalidArgumentError("SceneConfig: need at least 3 feature channels");
  }
  if (sigma_foundation < 0.0 || sigma_encoder < 0.0) {
    throw InvalidArgumentError("SceneConfig: noise sigmas must be >= 0");
  }
  // the foundation stream is the quality source; equality is only allowed
  // in the fully noiseless case
  if (sigma_encoder > 0.0 && !(sigma_foundation < sigma_encoder)) {
    throw InvalidArgumentError(
        "SceneConfig: sigma_foundation must be strictly below sigma_encoder");
  }
  if (sigma_encoder == 0.0 && sigma_foundation > 0.0) {
    throw InvalidArgumentError(
        "SceneConfig: sigma_foundation must be strictly below sigma_encoder");
  }
  if (object_count < 0 || object_size < 1 || object_speed < 0.0) {
    throw InvalidArgumentError("SceneConfig: bad object parameters");
  }
}

SynthWorld::SynthWorld(const SceneConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng::keyed(cfg_.seed, kTagScene, 0, 0);

  base_ = rng.uniform(0.45, 0.55);
  waves_.resize(3);
  for (Wave& w : waves_) {
    w.amplitude = rng.uniform(0.008, 0.02);
    w.freq_x = rng.uniform_int(1, 2);
    w.freq_y = rng.uniform_int(1, 2);
    w.phase = rng.uniform(0.0, 2.0 * kPi);
  }

  objects_.resize(cfg_.object_count);
  for (int k = 0; k < cfg_.object_count; ++k) {
    ObjectTrack& o = objects_[k];
    o.x0 = rng.uniform(0.0, cfg_.width);
    o.y0 = rng.uniform(0.0, cfg_.height);
    const double angle = rng.uniform(0.0, 2.0 * kPi);
    o.vx = cfg_.object_speed * std::cos(angle);
    o.vy = cfg_.object_speed * std::sin(angle);
    o.size = cfg_.object_size;
    // distinct offsets, alternating near/far of the terrain band
    const double off = 0.25 + 0.06 * k;
    o.depth = base_ + (k % 2 == 0 ? off : -off * 0.8);
  }

  // random encoding with orthogonal columns of norm sqrt(C): the noise
  // gain of the left inverse is then identical for every seed
  encoding_ = Matrix(cfg_.channels, 3);
  const int c = cfg_.channels;
  std::vector<std::vector<double>> cols(3, std::vector<double>(c));
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < c; ++i) cols[k][i] = rng.gaussian();
    for (int j = 0; j < k; ++j) {
      double dot = 0.0;
      for (int i = 0; i < c; ++i) dot += cols[k][i] * cols[j][i];
      for (int i = 0; i < c; ++i) cols[k][i] -= dot * cols[j][i];
    }
    double norm = 0.0;
    for (int i = 0; i < c; ++i) norm += cols[k][i] * cols[k][i];
    norm = std::sqrt(norm);
    if (!(norm > 1e-9)) {
      throw ConfigError("SynthWorld: degenerate encoding draw; change the seed");
    }
    for (int i = 0; i < c; ++i) cols[k][i] /= norm;
  }
  const double scale = std::sqrt(static_cast<double>(c));
  for (int i = 0; i < c; ++i) {
    for (int k = 0; k < 3; ++k) encoding_.at(i, k) = scale * cols[k][i];
  }
}

std::array<std::pair<int, int>, 4> SynthWorld::level_sizes() const {
  std::array<std::pair<int, int>, 4> sizes;
  for (int l = 0; l < 4; ++l) {
    sizes[l] = {cfg_.height / kPoolFactor[l], cfg_.width / kPoolFactor[l]};
  }
  return sizes;
}

double SynthWorld::terrain(int x, int y) const {
  double v = base_;
  for (const Wave& w : waves_) {
    v += w.amplitude *
         std::sin(2.0 * kPi * (static_cast<double>(w.freq_x) * x / cfg_.width +
                               static_cast<double>(w.freq_y) * y / cfg_.height) +
                  w.phase);
  }
  return v;
}

std::vector<ObjectBox> SynthWorld::object_boxes(std::int64_t t) const {
  std::vector<ObjectBox> boxes;
  boxes.reserve(objects_.size());
  const double td = static_cast<double>(t);
  for (const ObjectTrack& o : objects_) {
    ObjectBox b;
    b.x = o.x0 + (o.vx + cfg_.drift_x) * td;
    b.y = o.y0 + (o.vy + cfg_.drift_y) * td;
    b.size = o.size;
    b.depth = o.depth;
    boxes.push_back(b);
  }
  return boxes;
}

bool box_contains(const ObjectBox& box, int px, int py, int width, int height) {
  const int bx = wrap(static_cast<int>(std::llround(box.x)), width);
  const int by = wrap(static_cast<int>(std::llround(box.y)), height);
  const int dx = wrap(px - bx, width);
  const int dy = wrap(py - by, height);
  return dx < box.size && dy < box.size;
}

DepthMap SynthWorld::depth_frame(std::int64_t t) const {
  DepthMap depth(cfg_.height, cfg_.width);
  const int sx = wrap(static_cast<int>(cfg_.drift_x * t % cfg_.width), cfg_.width);
  const int sy = wrap(static_cast<int>(cfg_.drift_y * t % cfg_.height), cfg_.height);
  for (int y = 0; y < cfg_.height; ++y) {
    const int ty = wrap(y - sy, cfg_.height);
    for (int x = 0; x < cfg_.width; ++x) {
      depth.at(y, x) = terrain(wrap(x - sx, cfg_.width), ty);
    }
  }
  for (const ObjectBox& box : object_boxes(t)) {
    const int bx = wrap(static_cast<int>(std::llround(box.x)), cfg_.width);
    const int by = wrap(static_cast<int>(std::llround(box.y)), cfg_.height);
    for (int dy = 0; dy < box.size; ++dy) {
      const int y = (by + dy) % cfg_.height;
      for (int dx = 0; dx < box.size; ++dx) {
        depth.at(y, (bx + dx) % cfg_.width) = box.depth;
      }
    }
  }
  return depth;
}

std::array<FeatureMap, 4> SynthWorld::features(const DepthMap& depth, std::int64_t t,
                                               int stream_tag, double sigma) const {
  std::array<FeatureMap, 4> out;
  for (int l = 0; l < 4; ++l) {
    const int p = kPoolFactor[l];
    const int lh = cfg_.height / p;
    const int lw = cfg_.width / p;
    FeatureMap fm(cfg_.channels, lh, lw, l + 1);

    Rng rng = Rng::keyed(cfg_.seed, static_cast<std::uint64_t>(stream_tag),
                         static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(l));
    const int pixels = lh * lw;
    for (int by = 0; by < lh; ++by) {
      for (int bx = 0; bx < lw; ++bx) {
        // local descriptor: pooled inverse depth plus its two first moments
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
        const double inv_area = 1.0 / (p * p);
        d0 *= inv_area;
        d1 *= inv_area;
        d2 *= inv_area;
        const int pix = by * lw + bx;
        for (int c = 0; c < cfg_.channels; ++c) {
          double f = encoding_.at(c, 0) * d0 + encoding_.at(c, 1) * d1 +
                     encoding_.at(c, 2) * d2;
          if (sigma > 0.0) f += sigma * rng.gaussian();
          fm.data[static_cast<std::size_t>(c) * pixels + pix] = f;
        }
      }
    }
    out[l] = std::move(fm);
  }
  return out;
}

FrameBundle SynthWorld::frame(std::int64_t t) const {
  if (t < 0) throw InvalidArgumentError("SynthWorld: frame index must be >= 0");
  FrameBundle bundle;
  bundle.frame = t;
  bundle.ground_truth = depth_frame(t);
  bundle.foundation = features(bundle.ground_truth, t, kTagFoundation,
                               cfg_.sigma_foundation);
  bundle.encoder = features(bundle.ground_truth, t, kTagEncoder, cfg_.sigma_encoder);
  return bundle;
}

std::vector<FrameBundle> SynthWorld::generate(std::int64_t length) const {
  if (length < 1) throw InvalidArgumentError("generate_sequence: length must be >= 1");
  std::vector<FrameBundle> seq;
  seq.reserve(static_cast<std::size_t>(length));
  for (std::int64_t t = 0; t < length; ++t) seq.push_back(frame(t));
  return seq;
}

std::vector<FrameBundle> generate_sequence(const SceneConfig& cfg, std::int64_t length) {
  return SynthWorld(cfg).generate(length);
}

// ------------------------------- decoder ----------------------------------

Decoder::Decoder(const Matrix& encoding, const ReadoutParams& readout, int out_h,
                 int out_w)
    : readout_(readout), out_h_(out_h), out_w_(out_w) {
  if (encoding.cols != 3 || encoding.rows < 3) {
    throw ConfigError("Decoder: encoding matrix must be C x 3 with C >= 3");
  }
  if (out_h < 1 || out_w < 1) throw ConfigError("Decoder: bad output size");
  double wsum = 0.0;
  for (double w : readout_.level_weights) {
    if (w < 0.0) throw ConfigError("Decoder: level weights must be >= 0");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw ConfigError("Decoder: level weights must sum to 1");
  }

  // left inverse (EtE)^-1 Et via the 3x3 adjugate
  double g[3][3] = {};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int c = 0; c < encoding.rows; ++c) s += encoding.at(c, i) * encoding.at(c, j);
      g[i][j] = s;
    }
  }
  const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                     g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                     g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
  if (!(std::abs(det) > 1e-12)) {
    throw ConfigError("Decoder: encoding matrix is rank-deficient");
  }
  double inv[3][3];
  inv[0][0] = (g[1][1] * g[2][2] - g[1][2] * g[2][1]) / det;
  inv[0][1] = (g[0][2] * g[2][1] - g[0][1] * g[2][2]) / det;
  inv[0][2] = (g[0][1] * g[1][2] - g[0][2] * g[1][1]) / det;
  inv[1][0] = (g[1][2] * g[2][0] - g[1][0] * g[2][2]) / det;
  inv[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) / det;
  inv[1][2] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) / det;
  inv[2][0] = (g[1][0] * g[2][1] - g[1][1] * g[2][0]) / det;
  inv[2][1] = (g[0][1] * g[2][0] - g[0][0] * g[2][1]) / det;
  inv[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) / det;

  left_inverse_ = Matrix(3, encoding.rows);
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < encoding.rows; ++c) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += inv[i][j] * encoding.at(c, j);
      left_inverse_.at(i, c) = s;
    }
  }
}

FeatureMap Decoder::apply_left_inverse(const FeatureMap& features) const {
  if (features.channels != left_inverse_.cols) {
    throw InvalidArgumentError("Decoder: feature channel count mismatch");
  }
  return pointwise_linear(features, left_inverse_, {0.0, 0.0, 0.0});
}

DepthMap Decoder::decode(const std::array<FeatureMap, 4>& fused) const {
  DepthMap out(out_h_, out_w_);
  for (int l = 0; l < 4; ++l) {
    const FeatureMap desc = apply_left_inverse(fused[l]);
    FeatureMap depth_l(1, desc.height, desc.width, l + 1);
    std::copy(desc.data.begin(),
              desc.data.begin() + static_cast<std::size_t>(desc.height) * desc.width,
              depth_l.data.begin());
    const FeatureMap up = bilinear_resize(depth_l, out_h_, out_w_);
    const double w = readout_.level_weights[l];
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += w * up.data[i];
  }
  return out;
}

DepthMap linear_decode(const std::array<FeatureMap, 4>& fused, const Decoder& decoder) {
  return decoder.decode(fused);
}

// ------------------------------ disk replay --------------------------------

namespace {

std::string frame_stem(std::int64_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06lld", static_cast<long long>(t));
  return buf;
}

}  // namespace

SequenceData make_sequence(const SceneConfig& cfg, std::int64_t length) {
  SynthWorld world(cfg);
  SequenceData data;
  data.scene = cfg;
  data.encoding = world.encoding();
  data.frames = world.generate(length);
  return data;
}

void save_sequence(const std::string& dir, const SequenceData& data) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("save_sequence: cannot create " + dir + ": " + ec.message());
  const SceneConfig& cfg = data.scene;

  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw IoError("save_sequence: cannot write manifest in " + dir);
  manifest.precision(17);
  manifest << "asyncmde-sequence v1\n";
  manifest << "frames = " << data.frames.size() << "\n";
  manifest << "height = " << cfg.height << "\n";
  manifest << "width = " << cfg.width << "\n";
  manifest << "channels = " << cfg.channels << "\n";
  manifest << "seed = " << cfg.seed << "\n";
  manifest << "sigma_foundation = " << cfg.sigma_foundation << "\n";
  manifest << "sigma_encoder = " << cfg.sigma_encoder << "\n";
  manifest.close();
  if (!manifest) throw IoError("save_sequence: manifest write failed");

  FeatureMap packed(data.encoding.rows, data.encoding.cols, 1);
  std::copy(data.encoding.data.begin(), data.encoding.data.end(), packed.data.begin());
  tensor_write((fs::path(dir) / "encoding.amde").string(), packed);

  for (const FrameBundle& b : data.frames) {
    const std::string stem = (fs::path(dir) / frame_stem(b.frame)).string();
    tensor_write(stem + ".gt.amde", b.ground_truth);
    for (int l = 0; l < 4; ++l) {
      tensor_write(stem + ".foundation.l" + std::to_string(l + 1) + ".amde",
                   b.foundation[l]);
      tensor_write(stem + ".encoder.l" + std::to_string(l + 1) + ".amde", b.encoder[l]);
    }
  }
}

SequenceData load_sequence(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw IoError("load_sequence: cannot open manifest in " + dir);
  std::string header;
  std::getline(manifest, header);
  if (header != "asyncmde-sequence v1") {
    throw FormatError("load_sequence: unrecognized manifest header");
  }
  SequenceData data;
  SceneConfig& cfg = data.scene;
  std::int64_t frames = -1;
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream ls(line);
    std::string key, eq;
    if (!(ls >> key >> eq) || eq != "=") continue;
    if (key == "frames") ls >> frames;
    else if (key == "height") ls >> cfg.height;
    else if (key == "width") ls >> cfg.width;
    else if (key == "channels") ls >> cfg.channels;
    else if (key == "seed") ls >> cfg.seed;
    else if (key == "sigma_foundation") ls >> cfg.sigma_foundation;
    else if (key == "sigma_encoder") ls >> cfg.sigma_encoder;
  }
  if (frames < 1) throw FormatError("load_sequence: manifest missing frame count");

  const FeatureMap packed = read_feature_map((fs::path(dir) / "encoding.amde").string());
  data.encoding = Matrix(packed.channels, packed.height);
  std::copy(packed.data.begin(), packed.data.end(), data.encoding.data.begin());

  data.frames.reserve(static_cast<std::size_t>(frames));
  for (std::int64_t t = 0; t < frames; ++t) {
    const std::string stem = (fs::path(dir) / frame_stem(t)).string();
    FrameBundle b;
    b.frame = t;
    b.ground_truth = read_depth_map(stem + ".gt.amde");
    for (int l = 0; l < 4; ++l) {
      b.foundation[l] =
          read_feature_map(stem + ".foundation.l" + std::to_string(l + 1) + ".amde");
      b.foundation[l].level = l + 1;
      b.encoder[l] =
          read_feature_map(stem + ".encoder.l" + std::to_string(l + 1) + ".amde");
      b.encoder[l].level = l + 1;
    }
    data.frames.push_back(std::move(b));
  }
  return data;
}

}  // namespace amde
