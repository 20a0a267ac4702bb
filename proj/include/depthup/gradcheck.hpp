#pragma once

#include <cstdint>

#include "depthup/image.hpp"
#include "depthup/solver.hpp"

namespace depthup {

/// Random solver problem: depth, initial depth and guidance uniform in [0,1], bandwidth
/// uniform in [lambda_min, lambda_max].
struct RandomProblem {
  DepthMap depth;
  DepthMap depth_init;
  ColorImage guide;
  BandwidthField bandwidth;
};

RandomProblem random_problem(GridShape shape, std::uint64_t seed, const SolverConfig& cfg);

struct GradientCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  Pixel worst{0, 0};
};

/// Smallest magnitude used as the denominator of the relative error, so entries that
/// are zero up to rounding do not dominate.
inline constexpr double kGradientRelFloor = 1e-8;

/// Compares bandwidth_gradient with central differences of objective() in every lambda_i.
/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, kGradientRelFloor).
GradientCheck check_bandwidth_gradient(const RandomProblem& problem, const SolverConfig& cfg,
                                       RegularizerSign sign = RegularizerSign::true_gradient, double step = 1e-6);

}  // namespace depthup
