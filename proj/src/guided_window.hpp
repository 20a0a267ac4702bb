#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "depthup/image.hpp"
#include "depthup/kernels.hpp"

namespace depthup::detail {

/// Per-solve precomputation shared by the robust solver and the MRF baseline: the
/// spatial table, linear offsets into replicate-padded buffers, and the color weight
/// of every (pixel, offset) pair. The color table is cached when it fits the memory
/// budget and recomputed on demand otherwise; both paths evaluate the same expression.
class GuidedWindow {
 public:
  static constexpr std::size_t kColorCacheBytes = std::size_t{1} << 30;

  GuidedWindow(const ColorImage& guide, int radius, double sigma_s, double sigma_c, bool allow_cache = true);

  GridShape shape() const { return shape_; }
  int pad() const { return pad_; }
  int padded_width() const { return padded_width_; }
  const SpatialKernel& kernel() const { return kernel_; }
  std::size_t window_size() const { return linear_offsets_.size(); }
  std::span<const std::ptrdiff_t> linear_offsets() const { return linear_offsets_; }

  std::size_t padded_index(int row, int col) const {
    return static_cast<std::size_t>(row + pad_) * static_cast<std::size_t>(padded_width_) +
           static_cast<std::size_t>(col + pad_);
  }

  /// Replicate-padded copy of a grid of this shape.
  std::vector<double> padded(std::span<const double> values) const;

  /// Color weights of the whole window around (row, col): a view into the cache, or
  /// `scratch` filled on demand (scratch must hold window_size() values).
  std::span<const double> colors(int row, int col, std::span<double> scratch) const;

 private:
  void fill_colors(std::size_t center, double* out) const;

  GridShape shape_;
  int pad_;
  int padded_width_;
  SpatialKernel kernel_;
  double sigma_c_;
  std::vector<std::ptrdiff_t> linear_offsets_;
  std::vector<double> red_, green_, blue_;
  std::vector<double> color_cache_;
};

}  // namespace depthup::detail
