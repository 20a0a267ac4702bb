#include "depthup/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace depthup {

void require_valid(GridShape shape) {
  if (!shape.valid()) {
    throw DimensionError("grid shape must be at least 1x1, got " + std::to_string(shape.height) + "x" +
                         std::to_string(shape.width));
  }
}

void require_same_shape(GridShape a, GridShape b, const char* what) {
  if (!(a == b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
  }
}

Pixel clamp_coord(int row, int col, GridShape shape) {
  return {std::clamp(row, 0, shape.height - 1), std::clamp(col, 0, shape.width - 1)};
}

namespace {

void check_unit_interval(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InputRangeError(std::string(what) + " value " + std::to_string(v) + " is outside [0,1]");
    }
  }
}

}  // namespace

DepthMap::DepthMap(GridShape shape, double fill) : grid_(shape, fill) { check_unit_interval(grid_.values(), "depth"); }

DepthMap::DepthMap(GridShape shape, std::vector<double> values) : grid_(shape, std::move(values)) {
  check_unit_interval(grid_.values(), "depth");
}

DepthMap::DepthMap(ScalarGrid grid) : grid_(std::move(grid)) { check_unit_interval(grid_.values(), "depth"); }

DepthMap DepthMap::with_value(std::size_t i, double v) const {
  std::vector<double> values = grid_.vector();
  values.at(i) = v;
  return DepthMap(shape(), std::move(values));
}

ColorImage::ColorImage(GridShape shape, Rgb fill) : shape_(shape) {
  require_valid(shape);
  values_.reserve(3 * shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) values_.insert(values_.end(), fill.begin(), fill.end());
  check_unit_interval(values_, "color");
}

ColorImage::ColorImage(GridShape shape, std::vector<double> interleaved) : shape_(shape), values_(std::move(interleaved)) {
  require_valid(shape);
  if (values_.size() != 3 * shape.size()) throw DimensionError("color value count does not match 3 x shape");
  check_unit_interval(values_, "color");
}

Neighborhood::Neighborhood(int radius) : radius_(radius) {
  if (radius < 0) throw DomainError("neighborhood radius must be >= 0");
  offsets_.reserve(static_cast<std::size_t>(diameter()) * static_cast<std::size_t>(diameter()));
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) offsets_.push_back({dy, dx});
}

DepthMap normalize_depth(std::span<const std::uint32_t> raw, GridShape shape, std::uint32_t max_code) {
  require_valid(shape);
  if (max_code == 0) throw InputRangeError("max_code must be positive");
  if (raw.size() != shape.size()) throw DimensionError("raw code count does not match shape");
  std::vector<double> values(raw.size());
  const double scale = static_cast<double>(max_code);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] > max_code) {
      throw InputRangeError("depth code " + std::to_string(raw[i]) + " exceeds max_code " + std::to_string(max_code));
    }
    values[i] = static_cast<double>(raw[i]) / scale;
  }
  return DepthMap(shape, std::move(values));
}

std::uint32_t quantize_half_up(double normalized, std::uint32_t max_code) {
  const double code = std::floor(normalized * static_cast<double>(max_code) + 0.5);
  return static_cast<std::uint32_t>(std::clamp(code, 0.0, static_cast<double>(max_code)));
}

std::vector<std::uint32_t> denormalize_depth(const DepthMap& depth, std::uint32_t max_code) {
  std::vector<std::uint32_t> codes(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) codes[i] = quantize_half_up(depth[i], max_code);
  return codes;
}

std::array<double, 4> cubic_convolution_weights(double t, double a) {
  auto kernel = [a](double x) {
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
  };
  return {kernel(1.0 + t), kernel(t), kernel(1.0 - t), kernel(2.0 - t)};
}

namespace {

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> make_taps(int src_len, int factor) {
  std::vector<Taps> taps(static_cast<std::size_t>(src_len) * static_cast<std::size_t>(factor));
  for (std::size_t x = 0; x < taps.size(); ++x) {
    const double s = (static_cast<double>(x) + 0.5) / factor - 0.5;
    const double base = std::floor(s);
    const int b = static_cast<int>(base);
    taps[x].weight = cubic_convolution_weights(s - base);
    for (int k = 0; k < 4; ++k) taps[x].index[k] = std::clamp(b - 1 + k, 0, src_len - 1);
  }
  return taps;
}

}  // namespace

DepthMap bicubic_upsample(const DepthMap& src, int factor) {
  if (factor < 1) throw DomainError("upsampling factor must be >= 1");
  if (factor == 1) return src;

  const GridShape in = src.shape();
  const GridShape out{in.height * factor, in.width * factor};
  const auto col_taps = make_taps(in.width, factor);
  const auto row_taps = make_taps(in.height, factor);

  // Horizontal pass at source row resolution, then vertical.
  ScalarGrid horizontal(GridShape{in.height, out.width});
  for (int r = 0; r < in.height; ++r) {
    for (int x = 0; x < out.width; ++x) {
      const Taps& t = col_taps[static_cast<std::size_t>(x)];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * src(r, t.index[k]);
      horizontal(r, x) = acc;
    }
  }

  ScalarGrid result(out);
  for (int y = 0; y < out.height; ++y) {
    const Taps& t = row_taps[static_cast<std::size_t>(y)];
    for (int x = 0; x < out.width; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * horizontal(t.index[k], x);
      result(y, x) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return DepthMap(std::move(result));
}

}  // namespace depthup
