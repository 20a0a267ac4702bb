#include "depthup/kernels.hpp"

#include <cstdlib>
#include <string>

namespace depthup {

SpatialKernel::SpatialKernel(int radius, double sigma_s) : neighborhood_(radius), sigma_s_(sigma_s) {
  if (!(sigma_s > 0.0) || !std::isfinite(sigma_s)) throw DomainError("sigma_s must be positive and finite");
  const double inv = 1.0 / (2.0 * sigma_s * sigma_s);
  table_.reserve(neighborhood_.size());
  for (const Offset& o : neighborhood_.offsets()) {
    const double dist_sq = static_cast<double>(o.dy * o.dy + o.dx * o.dx);
    table_.push_back(std::exp(-dist_sq * inv));
  }
  for (double t : table_) normalizer_ += t;
  weights_.reserve(table_.size());
  for (double t : table_) weights_.push_back(t / normalizer_);
}

double spatial_weight(Pixel i, Pixel j, const SpatialKernel& kernel) {
  const int dy = j.row - i.row;
  const int dx = j.col - i.col;
  const int r = kernel.radius();
  if (std::abs(dy) > r || std::abs(dx) > r) {
    throw DomainError("pixel (" + std::to_string(j.row) + "," + std::to_string(j.col) + ") is outside the window of (" +
                      std::to_string(i.row) + "," + std::to_string(i.col) + ")");
  }
  const auto k = static_cast<std::size_t>((dy + r) * kernel.neighborhood().diameter() + (dx + r));
  return kernel.weights()[k];
}

double color_weight(const ColorImage& img, Pixel i, Pixel j, double sigma_c) {
  const auto a = img.at(i);
  const auto b = img.at(j);
  double sum_sq = 0.0;
  for (int k = 0; k < 3; ++k) sum_sq += (a[k] - b[k]) * (a[k] - b[k]);
  return color_weight_from_sq_diff(sum_sq, sigma_c);
}

double combined_weight(const ColorImage& img, Pixel i, Pixel j, const SpatialKernel& kernel, double sigma_c) {
  const double spatial = spatial_weight(i, j, kernel);
  const double color = color_weight(img, i, clamp_coord(j.row, j.col, img.shape()), sigma_c);
  const double w = color * spatial;
  return w < kWeightFloor ? kWeightFloor : w;
}

double exp_error_norm(double x_sq, RobustNormParams params) {
  const double two_l2 = 2.0 * params.lambda * params.lambda;
  return two_l2 * (1.0 - std::exp(-x_sq / two_l2));
}

double exp_error_norm_deriv(double x_sq, RobustNormParams params) {
  const double e = std::exp(-x_sq / (2.0 * params.lambda * params.lambda));
  return e < kWeightFloor ? kWeightFloor : e;
}

double exp_error_norm_dlambda(double x_sq, RobustNormParams params) {
  const double l = params.lambda;
  const double e = std::exp(-x_sq / (2.0 * l * l));
  return 4.0 * l * (1.0 - e) - 2.0 * x_sq * e / l;
}

}  // namespace depthup
