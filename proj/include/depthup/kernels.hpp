#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "depthup/image.hpp"

namespace depthup {

/// Lower bound applied to every guidance weight so update denominators stay positive.
inline constexpr double kWeightFloor = 1e-300;

/// Gaussian spatial window over a square neighborhood.
///
/// Border pixels keep one weight per offset even when several offsets clamp onto the
/// same pixel, so the normalizer Z is identical for every pixel of the grid.
class SpatialKernel {
 public:
  SpatialKernel(int radius, double sigma_s);

  int radius() const { return neighborhood_.radius(); }
  double sigma_s() const { return sigma_s_; }
  const Neighborhood& neighborhood() const { return neighborhood_; }
  std::size_t size() const { return table_.size(); }

  /// Unnormalized exp(-|o|^2 / (2 sigma_s^2)) per offset.
  std::span<const double> table() const { return table_; }
  /// Normalized weights (table / Z).
  std::span<const double> weights() const { return weights_; }
  double normalizer() const { return normalizer_; }

 private:
  Neighborhood neighborhood_;
  double sigma_s_;
  std::vector<double> table_;
  std::vector<double> weights_;
  double normalizer_ = 0.0;
};

/// Normalized spatial weight between i and its (unclamped) neighbor j.
/// Throws DomainError when j is outside the window of i.
double spatial_weight(Pixel i, Pixel j, const SpatialKernel& kernel);

/// Color weight from a summed squared RGB difference; denominator 3 * 2 sigma_c^2.
inline double color_weight_from_sq_diff(double sum_sq, double sigma_c) {
  const double w = std::exp(-sum_sq / (6.0 * sigma_c * sigma_c));
  return w < kWeightFloor ? kWeightFloor : w;
}

double color_weight(const ColorImage& img, Pixel i, Pixel j, double sigma_c);

/// color_weight * spatial_weight. j is the unclamped neighbor; the color lookup clamps it.
double combined_weight(const ColorImage& img, Pixel i, Pixel j, const SpatialKernel& kernel, double sigma_c);

struct RobustNormParams {
  double lambda = 7.0 / 255.0;
};

/// 2 lambda^2 (1 - exp(-x_sq / (2 lambda^2))).
double exp_error_norm(double x_sq, RobustNormParams params);
/// d/d(x_sq) of exp_error_norm: exp(-x_sq / (2 lambda^2)), floored at kWeightFloor.
double exp_error_norm_deriv(double x_sq, RobustNormParams params);
/// d/d(lambda) of exp_error_norm: 4 lambda (1 - e) - 2 x_sq e / lambda.
double exp_error_norm_dlambda(double x_sq, RobustNormParams params);

}  // namespace depthup
