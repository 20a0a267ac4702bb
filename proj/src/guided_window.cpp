// Must precede every other include so the vector declaration of exp is seen first.
#include "simd_math.hpp"

#include "guided_window.hpp"

#include <algorithm>


namespace depthup::detail {

GuidedWindow::GuidedWindow(const ColorImage& guide, int radius, double sigma_s, double sigma_c, bool allow_cache)
    : shape_(guide.shape()),
      pad_(radius),
      padded_width_(guide.width() + 2 * radius),
      kernel_(radius, sigma_s),
      sigma_c_(sigma_c) {
  for (const Offset& o : kernel_.neighborhood().offsets()) {
    linear_offsets_.push_back(static_cast<std::ptrdiff_t>(o.dy) * padded_width_ + o.dx);
  }

  std::vector<double> channel(shape_.size());
  auto extract = [&](int k) {
    for (int r = 0; r < shape_.height; ++r)
      for (int c = 0; c < shape_.width; ++c) channel[static_cast<std::size_t>(r) * shape_.width + c] = guide.channel(r, c, k);
    return padded(channel);
  };
  red_ = extract(0);
  green_ = extract(1);
  blue_ = extract(2);

  const std::size_t pairs = shape_.size() * linear_offsets_.size();
  if (allow_cache && pairs <= kColorCacheBytes / sizeof(double)) {
    color_cache_.resize(pairs);
    double* at = color_cache_.data();
    for (int r = 0; r < shape_.height; ++r)
      for (int c = 0; c < shape_.width; ++c, at += linear_offsets_.size()) fill_colors(padded_index(r, c), at);
  }
}

std::vector<double> GuidedWindow::padded(std::span<const double> values) const {
  const int padded_height = shape_.height + 2 * pad_;
  std::vector<double> out(static_cast<std::size_t>(padded_height) * static_cast<std::size_t>(padded_width_));
  for (int pr = 0; pr < padded_height; ++pr) {
    const int r = std::clamp(pr - pad_, 0, shape_.height - 1);
    for (int pc = 0; pc < padded_width_; ++pc) {
      const int c = std::clamp(pc - pad_, 0, shape_.width - 1);
      out[static_cast<std::size_t>(pr) * padded_width_ + pc] = values[static_cast<std::size_t>(r) * shape_.width + c];
    }
  }
  return out;
}

void GuidedWindow::fill_colors(std::size_t center, double* out) const {
  const int diameter = kernel_.neighborhood().diameter();
  const double scale = 1.0 / (6.0 * sigma_c_ * sigma_c_);
  const double r0 = red_[center], g0 = green_[center], b0 = blue_[center];
  for (int row = 0; row < diameter; ++row) {
    const std::size_t start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(center) +
                                                       static_cast<std::ptrdiff_t>(row - pad_) * padded_width_ - pad_);
    const double* rr = red_.data() + start;
    const double* gg = green_.data() + start;
    const double* bb = blue_.data() + start;
    double* dst = out + static_cast<std::size_t>(row) * static_cast<std::size_t>(diameter);
#pragma omp simd
    for (int k = 0; k < diameter; ++k) {
      const double dr = r0 - rr[k];
      const double dg = g0 - gg[k];
      const double db = b0 - bb[k];
      dst[k] = std::exp(-(dr * dr + dg * dg + db * db) * scale);
    }
    // Separate loop: a branch next to the exp call would keep it scalar.
    for (int k = 0; k < diameter; ++k) dst[k] = dst[k] < kWeightFloor ? kWeightFloor : dst[k];
  }
}

std::span<const double> GuidedWindow::colors(int row, int col, std::span<double> scratch) const {
  const std::size_t n = linear_offsets_.size();
  if (!color_cache_.empty()) {
    const std::size_t base =
        (static_cast<std::size_t>(row) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(col)) * n;
    return std::span<const double>(color_cache_).subspan(base, n);
  }
  fill_colors(padded_index(row, col), scratch.data());
  return scratch.first(n);
}

}  // namespace depthup::detail
