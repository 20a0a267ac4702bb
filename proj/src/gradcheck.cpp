#include "depthup/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace depthup {

RandomProblem random_problem(GridShape shape, std::uint64_t seed, const SolverConfig& cfg) {
  require_valid(shape);
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> lambda(cfg.lambda_min, cfg.lambda_max);
  auto fill = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = unit(rng);
    return v;
  };
  DepthMap depth(shape, fill(shape.size()));
  DepthMap depth_init(shape, fill(shape.size()));
  ColorImage guide(shape, fill(3 * shape.size()));
  ScalarGrid bw(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) bw[i] = lambda(rng);
  return {std::move(depth), std::move(depth_init), std::move(guide), BandwidthField(std::move(bw))};
}

GradientCheck check_bandwidth_gradient(const RandomProblem& problem, const SolverConfig& cfg, RegularizerSign sign,
                                       double step) {
  if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
  const SolverState state{problem.depth, problem.depth_init, problem.bandwidth, 0, {}};
  const ScalarGrid analytic = bandwidth_gradient(state, problem.guide, cfg, sign);

  const GridShape shape = problem.bandwidth.shape();
  GradientCheck result;
  ScalarGrid lambda = problem.bandwidth.grid();
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      const double base = lambda(r, c);
      lambda(r, c) = base + step;
      const double up = objective(problem.depth, problem.depth_init, problem.guide, BandwidthField(lambda), cfg);
      lambda(r, c) = base - step;
      const double down = objective(problem.depth, problem.depth_init, problem.guide, BandwidthField(lambda), cfg);
      lambda(r, c) = base;

      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic(r, c);
      const double abs_err = std::abs(a - numeric);
      const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), kGradientRelFloor});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      if (rel_err > result.max_rel_error) {
        result.max_rel_error = rel_err;
        result.worst = {r, c};
      }
    }
  }
  return result;
}

}  // namespace depthup
