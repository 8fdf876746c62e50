#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace amde {

// Dense multi-channel grid, row-major [channel][row][col]. Values are kept
// in 64-bit floats internally; the file format narrows to 32-bit.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  int level = 1;  // pyramid level, 1..4
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, int lvl = 1)
      : channels(c), height(h), width(w), level(lvl),
        data(static_cast<std::size_t>(c) * h * w, 0.0) {}

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::size_t size() const { return data.size(); }
  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// Single-channel depth grid with an optional per-pixel validity mask.
// An empty mask means every pixel is valid. Invalid pixels are excluded
// from every statistic computed on the map.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;
  std::vector<std::uint8_t> validity;  // empty => all valid

  DepthMap() = default;
  DepthMap(int h, int w)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool valid(std::size_t i) const { return validity.empty() || validity[i] != 0; }
  std::size_t size() const { return data.size(); }
};

// Dense row-major matrix used for channel-mixing weights.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  static Matrix identity(int n);

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// 3x3 convolution weights, layout [out][in][ky][kx], plus per-output bias.
struct Conv3x3Params {
  int out_channels = 0;
  int in_channels = 0;
  std::vector<double> weights;  // out*in*9
  std::vector<double> bias;     // out

  Conv3x3Params() = default;
  Conv3x3Params(int co, int ci)
      : out_channels(co), in_channels(ci),
        weights(static_cast<std::size_t>(co) * ci * 9, 0.0), bias(co, 0.0) {}

  double& w(int co, int ci, int ky, int kx) {
    return weights[((static_cast<std::size_t>(co) * in_channels + ci) * 3 + ky) * 3 + kx];
  }
  double w(int co, int ci, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(co) * in_channels + ci) * 3 + ky) * 3 + kx];
  }
};

// Separable bilinear resampling with half-pixel centers: the source
// coordinate of target column x is (x + 0.5) * (W_src / W_tgt) - 0.5,
// clamped to the valid range. Interpolation uses the lerp form
// a + f * (b - a), which keeps constant maps exact and never leaves
// [min(a,b), max(a,b)].
FeatureMap bilinear_resize(const FeatureMap& src, int target_h, int target_w);

// Per-pixel channel mix: out[c] = sum_k W[c,k] * in[k] + b[c].
FeatureMap pointwise_linear(const FeatureMap& src, const Matrix& weights,
                            const std::vector<double>& bias);

// Direct 3x3 convolution with zero padding of 1; same spatial size out.
FeatureMap conv2d_small(const FeatureMap& src, const Conv3x3Params& kernel);

// Elementwise logistic. Outputs are clamped into the open interval (0,1)
// so downstream trust math can rely on strict bounds.
FeatureMap sigmoid_map(const FeatureMap& src);

double sigmoid(double x);

// Concatenate along the channel axis; spatial sizes must match.
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

// ---------------------------------------------------------------------------
// Binary tensor file format (little-endian, no padding):
//   magic "AMDE" | u32 version=1 | u8 dtype (0 = f32) | u8 ndim (2 or 3)
//   | ndim x u32 dims, (C,)H,W | row-major f32 payload
// ---------------------------------------------------------------------------

void tensor_write(const std::string& path, const FeatureMap& map);
void tensor_write(const std::string& path, const DepthMap& map);
FeatureMap read_feature_map(const std::string& path);
DepthMap read_depth_map(const std::string& path);

}  // namespace amde
