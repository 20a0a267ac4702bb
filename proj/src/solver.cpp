// Must precede every other include so the vector declaration of exp is seen first.
#include "simd_math.hpp"

#include "depthup/solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <string>

#include "guided_window.hpp"
#include "parallel.hpp"

namespace depthup {

namespace {

constexpr std::array<double, 4> kScheduleAlpha{0.8, 0.9, 0.96, 0.99};
constexpr std::array<int, 4> kScheduleIters{5, 15, 50, 100};

std::size_t schedule_index(int factor) {
  if (factor < 1) throw ConfigError("upsampling factor must be >= 1");
  const double l = std::log2(static_cast<double>(factor));
  std::size_t best = 0;
  double best_dist = std::abs(l - 1.0);
  for (std::size_t i = 1; i < kScheduleAlpha.size(); ++i) {
    const double dist = std::abs(l - static_cast<double>(i + 1));
    if (dist < best_dist - 1e-12) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

double default_alpha_for_factor(int factor) { return kScheduleAlpha[schedule_index(factor)]; }
int default_max_iters_for_factor(int factor) { return kScheduleIters[schedule_index(factor)]; }

void SolverConfig::validate() const {
  if (alpha) require(std::isfinite(*alpha) && *alpha > 0.0 && *alpha < 1.0, "alpha must be in (0,1)");
  require(std::isfinite(beta) && beta >= 0.0, "beta must be >= 0");
  require(std::isfinite(sigma_s) && sigma_s > 0.0, "sigma_s must be > 0");
  require(std::isfinite(sigma_c) && sigma_c > 0.0, "sigma_c must be > 0");
  require(patch_radius >= 0, "patch_radius must be >= 0");
  require(std::isfinite(tau) && tau > 0.0, "tau must be > 0");
  require(std::isfinite(lambda_min) && lambda_min > 0.0, "lambda_min must be > 0");
  require(std::isfinite(lambda_init) && lambda_init > lambda_min, "lambda_init must be > lambda_min");
  require(std::isfinite(lambda_max) && lambda_max > lambda_init, "lambda_max must be > lambda_init");
  if (max_iters) require(*max_iters >= 0, "max_iters must be >= 0");
  require(std::isfinite(tol) && tol >= 0.0, "tol must be >= 0");
  require(threads >= 1, "threads must be >= 1");
}

SolverConfig SolverConfig::resolved_for_factor(int factor) const {
  SolverConfig out = *this;
  if (!out.alpha) out.alpha = default_alpha_for_factor(factor);
  if (!out.max_iters) out.max_iters = default_max_iters_for_factor(factor);
  return out;
}

double SolverConfig::alpha_value() const {
  if (!alpha) throw ConfigError("alpha is unset; resolve it from the upsampling factor first");
  return *alpha;
}

BandwidthField::BandwidthField(GridShape shape, double lambda) : BandwidthField(ScalarGrid(shape, lambda)) {}

BandwidthField::BandwidthField(ScalarGrid lambda) : lambda_(std::move(lambda)) {
  for (double l : lambda_.values()) {
    if (!std::isfinite(l) || l <= 0.0) throw DomainError("bandwidth values must be positive and finite");
  }
}

int upsampling_factor(GridShape low, GridShape high) {
  require_valid(low);
  require_valid(high);
  const bool integral = high.height % low.height == 0 && high.width % low.width == 0;
  if (!integral || high.height / low.height != high.width / low.width) {
    throw ConfigError("non-integer upsampling factor: guidance " + std::to_string(high.height) + "x" +
                      std::to_string(high.width) + " vs depth " + std::to_string(low.height) + "x" +
                      std::to_string(low.width));
  }
  return high.height / low.height;
}

namespace {

struct SweepParts {
  bool update = false;
  bool energy = false;
  bool gradient = false;
};

struct SweepOutput {
  std::vector<double> next;
  std::vector<double> energy;
  std::vector<double> gradient;
};

detail::GuidedWindow make_window(const ColorImage& guide, const SolverConfig& cfg) {
  return detail::GuidedWindow(guide, cfg.patch_radius, cfg.sigma_s, cfg.sigma_c);
}

struct PixelSums {
  double num_d = 0.0, den_d = 0.0, num_s = 0.0, den_s = 0.0;
  double e_d = 0.0, e_s = 0.0, g_d = 0.0, g_s = 0.0;
};

/// Window sums for one pixel. The window is walked one padded row at a time so the
/// inner loop reads contiguous memory and vectorizes. `combined` holds the floored
/// color-times-spatial weights of the window. The robust factors are not floored here:
/// every sum also contains a term of order one (the center pixel, or 4*lambda*(1 - e)
/// where e underflows), so a 1e-300 floor cannot change the result.
template <bool Update, bool Energy, bool Gradient>
PixelSums pixel_sums(const detail::GuidedWindow& win, std::size_t center, double di, double l,
                     const double* combined, const double* init_padded, const double* depth_padded) {
  const double inv_two_l2 = 1.0 / (2.0 * l * l);
  const double four_l = 4.0 * l;
  const double two_inv_l = 2.0 / l;
  const int diameter = win.kernel().neighborhood().diameter();
  const int pad = win.pad();
  const double* weights = win.kernel().weights().data();

  double num_d = 0.0, den_d = 0.0, num_s = 0.0, den_s = 0.0;
  double e_d = 0.0, e_s = 0.0, g_d = 0.0, g_s = 0.0;
  for (int row = 0; row < diameter; ++row) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(center) +
                                 static_cast<std::ptrdiff_t>(row - pad) * win.padded_width() - pad;
    const double* d0_row = init_padded + start;
    const double* dn_row = depth_padded + start;
    const double* w_row = weights + static_cast<std::ptrdiff_t>(row) * diameter;
    const double* wc_row = combined + static_cast<std::ptrdiff_t>(row) * diameter;
    // No branches in this loop: GCC only uses the vector exp when it is branch free.
#pragma omp simd reduction(+ : num_d, den_d, num_s, den_s, e_d, e_s, g_d, g_s)
    for (int k = 0; k < diameter; ++k) {
      const double w = w_row[k];
      const double wc = wc_row[k];
      const double d0 = d0_row[k];
      const double dn = dn_row[k];
      const double xd = (di - d0) * (di - d0);
      const double xs = (di - dn) * (di - dn);
      const double ed = std::exp(-xd * inv_two_l2);
      const double es = std::exp(-xs * inv_two_l2);
      if constexpr (Update) {
        num_d += w * ed * d0;
        den_d += w * ed;
        num_s += wc * es * dn;
        den_s += wc * es;
      }
      if constexpr (Energy) {
        e_d += w * (1.0 - ed);
        e_s += wc * (1.0 - es);
      }
      if constexpr (Gradient) {
        g_d += w * (four_l * (1.0 - ed) - two_inv_l * xd * ed);
        g_s += wc * (four_l * (1.0 - es) - two_inv_l * xs * es);
      }
    }
  }
  return {num_d, den_d, num_s, den_s, e_d, e_s, g_d, g_s};
}

template <bool Update, bool Energy, bool Gradient>
void sweep_rows(const detail::GuidedWindow& win, std::span<const double> depth, const std::vector<double>& depth_padded,
                std::span<const double> init_padded, std::span<const double> lambda, double alpha, int row_begin,
                int row_end, SweepOutput& out) {
  const GridShape shape = win.shape();
  const double data_scale = 1.0 - alpha;
  const std::size_t m = win.window_size();
  const double* weights = win.kernel().weights().data();
  std::vector<double> scratch(m);
  std::vector<double> combined(m);
  for (int r = row_begin; r < row_end; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * static_cast<std::size_t>(shape.width) + static_cast<std::size_t>(c);
      const double l = lambda[i];
      const double* colors = win.colors(r, c, scratch).data();
      for (std::size_t k = 0; k < m; ++k) {
        const double wc = colors[k] * weights[k];
        combined[k] = wc < kWeightFloor ? kWeightFloor : wc;
      }
      const PixelSums s = pixel_sums<Update, Energy, Gradient>(win, win.padded_index(r, c), depth[i], l,
                                                               combined.data(), init_padded.data(),
                                                               depth_padded.data());
      if constexpr (Update) {
        // The j = i smoothness term has s = 1 and a positive weight, so den > 0.
        const double den = data_scale * s.den_d + 2.0 * alpha * s.den_s;
        out.next[i] = std::clamp((data_scale * s.num_d + 2.0 * alpha * s.num_s) / den, 0.0, 1.0);
      }
      if constexpr (Energy) out.energy[i] = 2.0 * l * l * (data_scale * s.e_d + alpha * s.e_s);
      if constexpr (Gradient) out.gradient[i] = data_scale * s.g_d + alpha * s.g_s;
    }
  }
}

/// One pass over every pixel at (depth, lambda). All requested quantities come from the
/// same robust factors d_ij, s_ij.
SweepOutput robust_sweep(const detail::GuidedWindow& win, std::span<const double> depth,
                         std::span<const double> init_padded, std::span<const double> lambda, double alpha,
                         SweepParts parts, int threads) {
  const std::size_t n = win.shape().size();
  SweepOutput out;
  if (parts.update) out.next.resize(n);
  if (parts.energy) out.energy.resize(n);
  if (parts.gradient) out.gradient.resize(n);
  const std::vector<double> depth_padded = win.padded(depth);

  detail::parallel_rows(win.shape().height, threads, [&](int row_begin, int row_end) {
    auto run = [&]<bool U, bool E, bool G>() {
      sweep_rows<U, E, G>(win, depth, depth_padded, init_padded, lambda, alpha, row_begin, row_end, out);
    };
    const int mask = (parts.update ? 4 : 0) | (parts.energy ? 2 : 0) | (parts.gradient ? 1 : 0);
    switch (mask) {
      case 1: run.template operator()<false, false, true>(); break;
      case 2: run.template operator()<false, true, false>(); break;
      case 3: run.template operator()<false, true, true>(); break;
      case 4: run.template operator()<true, false, false>(); break;
      case 5: run.template operator()<true, false, true>(); break;
      case 6: run.template operator()<true, true, false>(); break;
      case 7: run.template operator()<true, true, true>(); break;
      default: break;
    }
  });
  return out;
}

double bandwidth_regularizer(const ScalarGrid& lambda) {
  double sum = 0.0;
  for (int r = 0; r < lambda.height(); ++r) {
    for (int c = 0; c < lambda.width(); ++c) {
      if (c + 1 < lambda.width()) {
        const double dx = lambda(r, c + 1) - lambda(r, c);
        sum += dx * dx;
      }
      if (r + 1 < lambda.height()) {
        const double dy = lambda(r + 1, c) - lambda(r, c);
        sum += dy * dy;
      }
    }
  }
  return sum;
}

double sum_in_order(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

void check_problem(GridShape depth, GridShape init, GridShape guide, const char* what) {
  require_same_shape(depth, init, what);
  require_same_shape(depth, guide, what);
}

ScalarGrid add_regularizer(const ScalarGrid& data_part, const BandwidthField& bw, double beta, RegularizerSign sign) {
  const ScalarGrid lap = discrete_laplacian(bw);
  ScalarGrid grad = data_part;
  const double coeff = sign == RegularizerSign::true_gradient ? -2.0 * beta : 2.0 * beta;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += coeff * lap[i];
  return grad;
}

BandwidthField descend(const BandwidthField& bw, const ScalarGrid& grad, const SolverConfig& cfg) {
  require_same_shape(bw.shape(), grad.shape(), "update_bandwidth");
  ScalarGrid next(bw.shape());
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] = std::clamp(bw[i] - cfg.tau * grad[i], cfg.lambda_min, cfg.lambda_max);
  }
  return BandwidthField(std::move(next));
}

double max_abs_change(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

double objective(const DepthMap& depth, const DepthMap& depth_init, const ColorImage& guide,
                 const BandwidthField& bandwidth, const SolverConfig& cfg) {
  check_problem(depth.shape(), depth_init.shape(), guide.shape(), "objective");
  require_same_shape(depth.shape(), bandwidth.shape(), "objective");
  cfg.validate();
  const double alpha = cfg.alpha_value();
  const auto win = make_window(guide, cfg);
  const auto init_padded = win.padded(depth_init.values());
  const SweepOutput out = robust_sweep(win, depth.values(), init_padded, bandwidth.values(), alpha,
                                       SweepParts{.energy = true}, cfg.threads);
  return sum_in_order(out.energy) + cfg.beta * bandwidth_regularizer(bandwidth.grid());
}

DepthMap update_depth(const SolverState& state, const ColorImage& guide, const SolverConfig& cfg) {
  check_problem(state.depth_current.shape(), state.depth_init.shape(), guide.shape(), "update_depth");
  require_same_shape(state.depth_current.shape(), state.bandwidth.shape(), "update_depth");
  cfg.validate();
  const auto win = make_window(guide, cfg);
  const auto init_padded = win.padded(state.depth_init.values());
  SweepOutput out = robust_sweep(win, state.depth_current.values(), init_padded, state.bandwidth.values(),
                                 cfg.alpha_value(), SweepParts{.update = true}, cfg.threads);
  return DepthMap(state.depth_current.shape(), std::move(out.next));
}

ScalarGrid discrete_laplacian(const BandwidthField& field) {
  const ScalarGrid& l = field.grid();
  const int h = l.height();
  const int w = l.width();
  ScalarGrid lap(l.shape());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double up = l(std::max(r - 1, 0), c);
      const double down = l(std::min(r + 1, h - 1), c);
      const double left = l(r, std::max(c - 1, 0));
      const double right = l(r, std::min(c + 1, w - 1));
      lap(r, c) = up + down + left + right - 4.0 * l(r, c);
    }
  }
  return lap;
}

ScalarGrid bandwidth_gradient(const SolverState& state, const ColorImage& guide, const SolverConfig& cfg,
                              RegularizerSign sign) {
  check_problem(state.depth_current.shape(), state.depth_init.shape(), guide.shape(), "bandwidth_gradient");
  require_same_shape(state.depth_current.shape(), state.bandwidth.shape(), "bandwidth_gradient");
  cfg.validate();
  const auto win = make_window(guide, cfg);
  const auto init_padded = win.padded(state.depth_init.values());
  SweepOutput out = robust_sweep(win, state.depth_current.values(), init_padded, state.bandwidth.values(),
                                 cfg.alpha_value(), SweepParts{.gradient = true}, cfg.threads);
  return add_regularizer(ScalarGrid(state.bandwidth.shape(), std::move(out.gradient)), state.bandwidth, cfg.beta, sign);
}

BandwidthField update_bandwidth(const SolverState& state, const ScalarGrid& grad, const SolverConfig& cfg) {
  return descend(state.bandwidth, grad, cfg);
}

UpsampleResult refine(const DepthMap& depth_init, const ColorImage& guide, const SolverConfig& cfg) {
  const auto start = Clock::now();
  require_same_shape(depth_init.shape(), guide.shape(), "refine");
  cfg.validate();
  const double alpha = cfg.alpha_value();
  if (!cfg.max_iters) throw ConfigError("max_iters is unset; resolve it from the upsampling factor first");
  const int max_iters = *cfg.max_iters;

  const auto win = make_window(guide, cfg);
  const auto init_padded = win.padded(depth_init.values());
  const SweepParts step_parts{.update = true, .energy = true, .gradient = cfg.adaptive_bandwidth};

  std::vector<double> depth(depth_init.values().begin(), depth_init.values().end());
  BandwidthField bandwidth(depth_init.shape(), cfg.lambda_init);
  UpsampleReport report;
  report.alpha = alpha;
  report.max_iters = max_iters;

  for (int it = 0; it < max_iters; ++it) {
    SweepOutput out = robust_sweep(win, depth, init_padded, bandwidth.values(), alpha, step_parts, cfg.threads);
    report.objective_trace.push_back(sum_in_order(out.energy) + cfg.beta * bandwidth_regularizer(bandwidth.grid()));
    if (cfg.adaptive_bandwidth) {
      const ScalarGrid grad = add_regularizer(ScalarGrid(bandwidth.shape(), std::move(out.gradient)), bandwidth,
                                              cfg.beta, RegularizerSign::true_gradient);
      bandwidth = descend(bandwidth, grad, cfg);
    }
    const double change = max_abs_change(out.next, depth);
    depth = std::move(out.next);
    ++report.iterations_run;
    if (change < cfg.tol) {
      report.converged = true;
      break;
    }
  }

  const SweepOutput last =
      robust_sweep(win, depth, init_padded, bandwidth.values(), alpha, SweepParts{.energy = true}, cfg.threads);
  report.final_objective = sum_in_order(last.energy) + cfg.beta * bandwidth_regularizer(bandwidth.grid());
  report.objective_trace.push_back(report.final_objective);
  report.wall_time = seconds_since(start);
  return UpsampleResult{DepthMap(depth_init.shape(), std::move(depth)), std::move(bandwidth), std::move(report)};
}

UpsampleResult upsample(const DepthMap& low, const ColorImage& guide, const SolverConfig& cfg) {
  const auto start = Clock::now();
  const int factor = upsampling_factor(low.shape(), guide.shape());
  const SolverConfig resolved = cfg.resolved_for_factor(factor);
  resolved.validate();
  UpsampleResult result = refine(bicubic_upsample(low, factor), guide, resolved);
  result.report.wall_time = seconds_since(start);
  return result;
}

namespace {

std::vector<double> mrf_step(const detail::GuidedWindow& win, std::span<const double> depth,
                             std::span<const double> init, double alpha, int threads) {
  const GridShape shape = win.shape();
  const std::vector<double> depth_padded = win.padded(depth);
  const std::span<const std::ptrdiff_t> offsets = win.linear_offsets();
  const std::size_t m = offsets.size();
  std::vector<double> next(shape.size());
  detail::parallel_rows(shape.height, threads, [&](int row_begin, int row_end) {
    std::vector<double> scratch(m);
    for (int r = row_begin; r < row_end; ++r) {
      for (int c = 0; c < shape.width; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * static_cast<std::size_t>(shape.width) + static_cast<std::size_t>(c);
        const std::size_t center = win.padded_index(r, c);
        const std::span<const double> colors = win.colors(r, c, scratch);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const std::size_t j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(center) + offsets[k]);
          num += colors[k] * depth_padded[j];
          den += colors[k];
        }
        const double v = ((1.0 - alpha) * init[i] + 2.0 * alpha * num) / ((1.0 - alpha) + 2.0 * alpha * den);
        next[i] = std::clamp(v, 0.0, 1.0);
      }
    }
  });
  return next;
}

double mrf_energy(const detail::GuidedWindow& win, std::span<const double> depth, std::span<const double> init,
                  double alpha) {
  const GridShape shape = win.shape();
  const std::vector<double> depth_padded = win.padded(depth);
  const std::span<const std::ptrdiff_t> offsets = win.linear_offsets();
  std::vector<double> scratch(offsets.size());
  double total = 0.0;
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * static_cast<std::size_t>(shape.width) + static_cast<std::size_t>(c);
      const std::size_t center = win.padded_index(r, c);
      const std::span<const double> colors = win.colors(r, c, scratch);
      double smooth = 0.0;
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const double diff = depth[i] - depth_padded[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(center) + offsets[k])];
        smooth += colors[k] * diff * diff;
      }
      const double data = depth[i] - init[i];
      total += (1.0 - alpha) * data * data + alpha * smooth;
    }
  }
  return total;
}

}  // namespace

double mrf_objective(const DepthMap& depth, const DepthMap& depth_init, const ColorImage& guide,
                     const SolverConfig& cfg) {
  check_problem(depth.shape(), depth_init.shape(), guide.shape(), "mrf_objective");
  cfg.validate();
  return mrf_energy(make_window(guide, cfg), depth.values(), depth_init.values(), cfg.alpha_value());
}

DepthMap mrf_update(const DepthMap& depth, const DepthMap& depth_init, const ColorImage& guide,
                    const SolverConfig& cfg) {
  check_problem(depth.shape(), depth_init.shape(), guide.shape(), "mrf_update");
  cfg.validate();
  return DepthMap(depth.shape(),
                  mrf_step(make_window(guide, cfg), depth.values(), depth_init.values(), cfg.alpha_value(), cfg.threads));
}

MrfResult mrf_upsample(const DepthMap& low, const ColorImage& guide, const SolverConfig& cfg) {
  const auto start = Clock::now();
  const int factor = upsampling_factor(low.shape(), guide.shape());
  const SolverConfig resolved = cfg.resolved_for_factor(factor);
  resolved.validate();
  const double alpha = resolved.alpha_value();
  const int max_iters = *resolved.max_iters;

  const DepthMap init = bicubic_upsample(low, factor);
  const auto win = make_window(guide, resolved);
  std::vector<double> depth(init.values().begin(), init.values().end());
  UpsampleReport report;
  report.alpha = alpha;
  report.max_iters = max_iters;

  for (int it = 0; it < max_iters; ++it) {
    report.objective_trace.push_back(mrf_energy(win, depth, init.values(), alpha));
    std::vector<double> next = mrf_step(win, depth, init.values(), alpha, resolved.threads);
    const double change = max_abs_change(next, depth);
    depth = std::move(next);
    ++report.iterations_run;
    if (change < resolved.tol) {
      report.converged = true;
      break;
    }
  }
  report.final_objective = mrf_energy(win, depth, init.values(), alpha);
  report.objective_trace.push_back(report.final_objective);
  report.wall_time = seconds_since(start);
  return MrfResult{DepthMap(init.shape(), std::move(depth)), std::move(report)};
}

}  // namespace depthup
