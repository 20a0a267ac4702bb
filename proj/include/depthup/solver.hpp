#pragma once

#include <optional>
#include <vector>

#include "depthup/image.hpp"
#include "depthup/kernels.hpp"

namespace depthup {

/// Data/smoothness balance for the 2x/4x/8x/16x schedule; other factors take the entry
/// nearest in log2 (ties go to the smaller factor).
double default_alpha_for_factor(int factor);
/// Iteration budget for the same schedule: 5/15/50/100.
int default_max_iters_for_factor(int factor);

struct SolverConfig {
  /// Unset means "resolve from the upsampling factor".
  std::optional<double> alpha;
  double beta = 0.3;
  double sigma_s = 9.0;
  double sigma_c = 10.0 / 255.0;
  int patch_radius = 9;
  double lambda_init = 7.0 / 255.0;
  double tau = 0.3;
  double lambda_min = 1.0 / 255.0;
  double lambda_max = 50.0 / 255.0;
  /// Unset means "resolve from the upsampling factor".
  std::optional<int> max_iters;
  /// Convergence threshold on max |D^{n+1} - D^n|.
  double tol = 1e-5;
  bool adaptive_bandwidth = true;
  /// Worker threads for the per-pixel sweeps. Results do not depend on this.
  int threads = 1;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
  /// Copy with alpha and max_iters filled from the factor schedule when unset.
  SolverConfig resolved_for_factor(int factor) const;
  /// alpha, throwing ConfigError if it has not been resolved.
  double alpha_value() const;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Per-pixel bandwidth of the exponential error norm.
class BandwidthField {
 public:
  BandwidthField() = default;
  BandwidthField(GridShape shape, double lambda);
  explicit BandwidthField(ScalarGrid lambda);

  GridShape shape() const { return lambda_.shape(); }
  double operator()(int row, int col) const { return lambda_(row, col); }
  double operator[](std::size_t i) const { return lambda_[i]; }
  std::span<const double> values() const { return lambda_.values(); }
  const ScalarGrid& grid() const { return lambda_; }

  friend bool operator==(const BandwidthField&, const BandwidthField&) = default;

 private:
  ScalarGrid lambda_;
};

struct SolverState {
  DepthMap depth_current;
  DepthMap depth_init;
  BandwidthField bandwidth;
  int iteration = 0;
  std::vector<double> objective_trace;
};

struct UpsampleReport {
  int iterations_run = 0;
  double final_objective = 0.0;
  /// Objective at every iterate, starting with the initial guess; size iterations_run + 1.
  std::vector<double> objective_trace;
  bool converged = false;
  double wall_time = 0.0;
  /// Resolved configuration the run used.
  double alpha = 0.0;
  int max_iters = 0;
};

struct UpsampleResult {
  DepthMap depth;
  BandwidthField bandwidth;
  UpsampleReport report;
};

struct MrfResult {
  DepthMap depth;
  UpsampleReport report;
};

/// Integer ratio between guidance and low-resolution shapes (equal per axis).
/// Throws ConfigError("non-integer upsampling factor ...") otherwise.
int upsampling_factor(GridShape low, GridShape high);

/// Robust energy with the bandwidth regularizer:
/// (1-a) sum_i sum_j w_ij phi(|D_i - D0_j|^2; l_i) + a sum_i sum_j w~_ij phi(|D_i - D_j|^2; l_i) + b sum_i |grad l_i|^2,
/// forward differences with replicate borders for grad l.
double objective(const DepthMap& depth, const DepthMap& depth_init, const ColorImage& guide,
                 const BandwidthField& bandwidth, const SolverConfig& cfg);

/// One Jacobi sweep of the reweighted fixed-point update.
DepthMap update_depth(const SolverState& state, const ColorImage& guide, const SolverConfig& cfg);

/// 5-point Laplacian with replicate borders.
ScalarGrid discrete_laplacian(const BandwidthField& field);

/// Sign of the bandwidth regularizer term in the per-pixel gradient. `true_gradient`
/// (-2 b Lap(l)) is the derivative of the objective; `flipped` (+2 b Lap(l)) exists to
/// show that the finite-difference check rejects it.
enum class RegularizerSign { true_gradient, flipped };

/// dE/d(l_i) at (depth_current, bandwidth).
ScalarGrid bandwidth_gradient(const SolverState& state, const ColorImage& guide, const SolverConfig& cfg,
                              RegularizerSign sign = RegularizerSign::true_gradient);

/// Steepest-descent step clamp(l - tau * grad, lambda_min, lambda_max).
BandwidthField update_bandwidth(const SolverState& state, const ScalarGrid& grad, const SolverConfig& cfg);

/// Bicubic initialization followed by alternating depth/bandwidth updates until
/// max |dD| < tol or the iteration budget is spent.
UpsampleResult upsample(const DepthMap& low, const ColorImage& guide, const SolverConfig& cfg);

/// Same loop starting from an explicit D0 (already at guidance resolution).
UpsampleResult refine(const DepthMap& depth_init, const ColorImage& guide, const SolverConfig& cfg);

/// Quadratic MRF energy: (1-a) sum_i (D_i - D0_i)^2 + a sum_i sum_j wc_ij (D_i - D_j)^2.
double mrf_objective(const DepthMap& depth, const DepthMap& depth_init, const ColorImage& guide, const SolverConfig& cfg);

/// One Jacobi step of the MRF fixed point over the same window as the robust solver.
DepthMap mrf_update(const DepthMap& depth, const DepthMap& depth_init, const ColorImage& guide, const SolverConfig& cfg);

/// MRF baseline: bicubic initialization, then mrf_update to convergence.
MrfResult mrf_upsample(const DepthMap& low, const ColorImage& guide, const SolverConfig& cfg);

}  // namespace depthup
