#include "amde/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "amde/errors.hpp"

namespace amde {

namespace {

void require_nonempty(const FeatureMap& m, const char* op) {
  if (m.channels <= 0 || m.height <= 0 || m.width <= 0 ||
      m.data.size() != static_cast<std::size_t>(m.channels) * m.height * m.width) {
    throw InvalidArgumentError(std::string(op) + ": empty or inconsistent feature map");
  }
}

void require_finite(const FeatureMap& m, const char* op) {
  for (double v : m.data) {
    if (!std::isfinite(v)) {
      throw InvariantViolationError(std::string(op) + ": non-finite value in output");
    }
  }
}

// Lerp that stays inside [min(a,b), max(a,b)] for f in [0,1).
inline double lerp(double a, double b, double f) { return a + f * (b - a); }

}  // namespace

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

FeatureMap bilinear_resize(const FeatureMap& src, int target_h, int target_w) {
  require_nonempty(src, "bilinear_resize");
  if (target_h < 1 || target_w < 1) {
    throw InvalidArgumentError("bilinear_resize: target size must be >= 1");
  }
  if (target_h == src.height && target_w == src.width) {
    require_finite(src, "bilinear_resize");
    return src;
  }

  FeatureMap out(src.channels, target_h, target_w, src.level);
  const double scale_y = static_cast<double>(src.height) / target_h;
  const double scale_x = static_cast<double>(src.width) / target_w;

  std::vector<int> x0(target_w), x1(target_w);
  std::vector<double> fx(target_w);
  for (int x = 0; x < target_w; ++x) {
    double sx = (x + 0.5) * scale_x - 0.5;
    sx = std::clamp(sx, 0.0, static_cast<double>(src.width - 1));
    x0[x] = static_cast<int>(sx);
    x1[x] = std::min(x0[x] + 1, src.width - 1);
    fx[x] = sx - x0[x];
  }

  for (int y = 0; y < target_h; ++y) {
    double sy = (y + 0.5) * scale_y - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = sy - y0;
    for (int c = 0; c < src.channels; ++c) {
      for (int x = 0; x < target_w; ++x) {
        const double top = lerp(src.at(c, y0, x0[x]), src.at(c, y0, x1[x]), fx[x]);
        const double bot = lerp(src.at(c, y1, x0[x]), src.at(c, y1, x1[x]), fx[x]);
        out.at(c, y, x) = lerp(top, bot, fy);
      }
    }
  }
  require_finite(out, "bilinear_resize");
  return out;
}

FeatureMap pointwise_linear(const FeatureMap& src, const Matrix& weights,
                            const std::vector<double>& bias) {
  require_nonempty(src, "pointwise_linear");
  if (weights.cols != src.channels) {
    throw InvalidArgumentError("pointwise_linear: weight columns (" +
                               std::to_string(weights.cols) + ") != input channels (" +
                               std::to_string(src.channels) + ")");
  }
  if (static_cast<int>(bias.size()) != weights.rows) {
    throw InvalidArgumentError("pointwise_linear: bias length != output channels");
  }

  FeatureMap out(weights.rows, src.height, src.width, src.level);
  const int pixels = src.height * src.width;
  for (int co = 0; co < weights.rows; ++co) {
    double* dst = &out.data[static_cast<std::size_t>(co) * pixels];
    for (int p = 0; p < pixels; ++p) dst[p] = bias[co];
    for (int ci = 0; ci < src.channels; ++ci) {
      const double w = weights.at(co, ci);
      const double* in = &src.data[static_cast<std::size_t>(ci) * pixels];
      for (int p = 0; p < pixels; ++p) dst[p] += w * in[p];
    }
  }
  require_finite(out, "pointwise_linear");
  return out;
}

FeatureMap conv2d_small(const FeatureMap& src, const Conv3x3Params& kernel) {
  require_nonempty(src, "conv2d_small");
  if (kernel.in_channels != src.channels) {
    throw InvalidArgumentError("conv2d_small: kernel input channels (" +
                               std::to_string(kernel.in_channels) +
                               ") != input channels (" + std::to_string(src.channels) + ")");
  }

  const int h = src.height, w = src.width;
  FeatureMap out(kernel.out_channels, h, w, src.level);
  for (int co = 0; co < kernel.out_channels; ++co) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = kernel.bias[co];
        for (int ci = 0; ci < src.channels; ++ci) {
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = x + kx - 1;
              if (sx < 0 || sx >= w) continue;
              acc += kernel.w(co, ci, ky, kx) * src.at(ci, sy, sx);
            }
          }
        }
        out.at(co, y, x) = acc;
      }
    }
  }
  require_finite(out, "conv2d_small");
  return out;
}

double sigmoid(double x) {
  double v;
  if (x >= 0.0) {
    v = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    v = e / (1.0 + e);
  }
  // keep the open-interval contract at the extremes
  static const double lo = std::nextafter(0.0, 1.0);
  static const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(v, lo, hi);
}

FeatureMap sigmoid_map(const FeatureMap& src) {
  require_nonempty(src, "sigmoid_map");
  FeatureMap out = src;
  for (double& v : out.data) v = sigmoid(v);
  require_finite(out, "sigmoid_map");
  return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  require_nonempty(a, "concat_channels");
  require_nonempty(b, "concat_channels");
  if (a.height != b.height || a.width != b.width) {
    throw InvalidArgumentError("concat_channels: spatial size mismatch");
  }
  FeatureMap out(a.channels + b.channels, a.height, a.width, a.level);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

// --------------------------- serialization --------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'M', 'D', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  if (std::fwrite(b, 1, 4, f) != 4) throw IoError("tensor_write: write failed");
}

std::uint32_t get_u32(std::FILE* f, const std::string& path) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) {
    throw TruncationError("tensor_read: short file: " + path);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_header_and_payload(const std::string& path, const std::uint32_t* dims,
                              int ndim, const std::vector<double>& values) {
  FileHandle f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("tensor_write: cannot open " + path);
  if (std::fwrite(kMagic, 1, 4, f.get()) != 4) throw IoError("tensor_write: write failed");
  put_u32(f.get(), kFormatVersion);
  const unsigned char dtype = 0;  // f32
  const unsigned char nd = static_cast<unsigned char>(ndim);
  if (std::fwrite(&dtype, 1, 1, f.get()) != 1 || std::fwrite(&nd, 1, 1, f.get()) != 1) {
    throw IoError("tensor_write: write failed");
  }
  for (int i = 0; i < ndim; ++i) put_u32(f.get(), dims[i]);
  std::vector<float> payload(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) payload[i] = static_cast<float>(values[i]);
  if (!payload.empty() &&
      std::fwrite(payload.data(), sizeof(float), payload.size(), f.get()) != payload.size()) {
    throw IoError("tensor_write: write failed");
  }
  if (std::fflush(f.get()) != 0) throw IoError("tensor_write: flush failed");
}

std::vector<std::uint32_t> read_header(std::FILE* f, const std::string& path,
                                       int expected_ndim) {
  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4) throw TruncationError("tensor_read: short file: " + path);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("tensor_read: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(f, path);
  if (version != kFormatVersion) {
    throw FormatError("tensor_read: unsupported format version " + std::to_string(version));
  }
  unsigned char dtype = 0, ndim = 0;
  if (std::fread(&dtype, 1, 1, f) != 1 || std::fread(&ndim, 1, 1, f) != 1) {
    throw TruncationError("tensor_read: short file: " + path);
  }
  if (dtype != 0) throw FormatError("tensor_read: unsupported dtype " + std::to_string(dtype));
  if (ndim != 2 && ndim != 3) {
    throw FormatError("tensor_read: bad ndim " + std::to_string(ndim));
  }
  if (ndim != expected_ndim) {
    throw FormatError("tensor_read: expected " + std::to_string(expected_ndim) +
                      "-dim tensor, file has " + std::to_string(ndim) + " dims: " + path);
  }
  std::vector<std::uint32_t> dims(ndim);
  for (int i = 0; i < ndim; ++i) {
    dims[i] = get_u32(f, path);
    if (dims[i] == 0) throw FormatError("tensor_read: zero dimension in " + path);
  }
  return dims;
}

std::vector<double> read_payload(std::FILE* f, std::size_t count, const std::string& path) {
  std::vector<float> payload(count);
  if (std::fread(payload.data(), sizeof(float), count, f) != count) {
    throw TruncationError("tensor_read: payload shorter than header declares: " + path);
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = payload[i];
  return values;
}

}  // namespace

void tensor_write(const std::string& path, const FeatureMap& map) {
  require_nonempty(map, "tensor_write");
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(map.channels),
                                 static_cast<std::uint32_t>(map.height),
                                 static_cast<std::uint32_t>(map.width)};
  write_header_and_payload(path, dims, 3, map.data);
}

void tensor_write(const std::string& path, const DepthMap& map) {
  if (map.height <= 0 || map.width <= 0 ||
      map.data.size() != static_cast<std::size_t>(map.height) * map.width) {
    throw InvalidArgumentError("tensor_write: empty or inconsistent depth map");
  }
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(map.height),
                                 static_cast<std::uint32_t>(map.width)};
  write_header_and_payload(path, dims, 2, map.data);
}

FeatureMap read_feature_map(const std::string& path) {
  FileHandle f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("tensor_read: cannot open " + path);
  const auto dims = read_header(f.get(), path, 3);
  FeatureMap map(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                 static_cast<int>(dims[2]));
  map.data = read_payload(f.get(), map.size(), path);
  return map;
}

DepthMap read_depth_map(const std::string& path) {
  FileHandle f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("tensor_read: cannot open " + path);
  const auto dims = read_header(f.get(), path, 2);
  DepthMap map(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  map.data = read_payload(f.get(), map.size(), path);
  return map;
}

}  // namespace amde
