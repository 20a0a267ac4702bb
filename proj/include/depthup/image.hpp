#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "depthup/error.hpp"

namespace depthup {

struct GridShape {
  int height = 0;
  int width = 0;

  std::size_t size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  bool valid() const { return height >= 1 && width >= 1; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Throws DimensionError unless height >= 1 and width >= 1.
void require_valid(GridShape shape);
/// Throws DimensionError when the two shapes differ; `what` names the operation.
void require_same_shape(GridShape a, GridShape b, const char* what);

struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Replicate border policy: each component clamped to [0, dim - 1].
Pixel clamp_coord(int row, int col, GridShape shape);

/// Dense row-major 2D grid.
template <class T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(GridShape shape, T fill = T{}) : shape_(shape), values_(shape.size(), fill) { require_valid(shape); }
  Grid(GridShape shape, std::vector<T> values) : shape_(shape), values_(std::move(values)) {
    require_valid(shape);
    if (values_.size() != shape.size()) throw DimensionError("grid value count does not match its shape");
  }

  GridShape shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return values_.size(); }

  T& operator()(int row, int col) { return values_[index(row, col)]; }
  const T& operator()(int row, int col) const { return values_[index(row, col)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  const std::vector<T>& vector() const { return values_; }

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(col);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  GridShape shape_{};
  std::vector<T> values_;
};

using ScalarGrid = Grid<double>;

/// Normalized depth in [0,1], double precision. Immutable once built.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(GridShape shape, double fill);
  DepthMap(GridShape shape, std::vector<double> values);
  explicit DepthMap(ScalarGrid grid);

  GridShape shape() const { return grid_.shape(); }
  int height() const { return grid_.height(); }
  int width() const { return grid_.width(); }
  std::size_t size() const { return grid_.size(); }

  double operator()(int row, int col) const { return grid_(row, col); }
  double operator[](std::size_t i) const { return grid_[i]; }
  double at(Pixel p) const { return grid_(p.row, p.col); }
  std::span<const double> values() const { return grid_.values(); }
  const ScalarGrid& grid() const { return grid_; }

  /// Copy with a single value replaced (validated).
  DepthMap with_value(std::size_t i, double v) const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  ScalarGrid grid_;
};

/// RGB guidance image, channels interleaved, each in [0,1].
class ColorImage {
 public:
  using Rgb = std::array<double, 3>;

  ColorImage() = default;
  ColorImage(GridShape shape, Rgb fill);
  ColorImage(GridShape shape, std::vector<double> interleaved);

  GridShape shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }

  Rgb operator()(int row, int col) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(col));
    return {values_[i], values_[i + 1], values_[i + 2]};
  }
  Rgb at(Pixel p) const { return (*this)(p.row, p.col); }
  double channel(int row, int col, int k) const {
    return values_[3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(col)) + static_cast<std::size_t>(k)];
  }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;

 private:
  GridShape shape_{};
  std::vector<double> values_;
};

struct Offset {
  int dy = 0;
  int dx = 0;
};

/// Square window of (2r+1)^2 offsets in row-major order (dy outer, dx inner).
class Neighborhood {
 public:
  explicit Neighborhood(int radius);

  int radius() const { return radius_; }
  int diameter() const { return 2 * radius_ + 1; }
  std::size_t size() const { return offsets_.size(); }
  std::span<const Offset> offsets() const { return offsets_; }
  /// Index of the (0,0) offset.
  std::size_t center_index() const { return offsets_.size() / 2; }

  /// Neighbor of `center` at offset k, clamped into the grid.
  Pixel resolve(Pixel center, std::size_t k, GridShape shape) const {
    const Offset o = offsets_[k];
    return clamp_coord(center.row + o.dy, center.col + o.dx, shape);
  }

 private:
  int radius_ = 0;
  std::vector<Offset> offsets_;
};

/// raw / max_code per pixel. Throws InputRangeError on codes above max_code.
DepthMap normalize_depth(std::span<const std::uint32_t> raw, GridShape shape, std::uint32_t max_code);
/// Quantize with round-half-up: floor(v * max_code + 0.5).
std::vector<std::uint32_t> denormalize_depth(const DepthMap& depth, std::uint32_t max_code);
std::uint32_t quantize_half_up(double normalized, std::uint32_t max_code);

/// Cubic convolution taps for source positions floor(x)-1 .. floor(x)+2, t = x - floor(x).
std::array<double, 4> cubic_convolution_weights(double t, double a = -0.5);

/// Cubic convolution upsampling (a = -0.5). Output pixel x samples source (x + 0.5) / factor - 0.5,
/// taps are border-clamped and the result is clamped to [0,1].
DepthMap bicubic_upsample(const DepthMap& src, int factor);

}  // namespace depthup
