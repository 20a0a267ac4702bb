#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "depthup/error.hpp"
#include "depthup/gradcheck.hpp"
#include "depthup/io.hpp"
#include "depthup/pipeline.hpp"
#include "depthup/solver.hpp"

namespace depthup::cli {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string with_default(const std::string& text, const std::string& value) {
  return text + " [default: " + value + "]";
}

/// Solver flags are collected as text first: a --config file supplies the base values
/// and any flag given on the command line overrides them.
struct SolverFlags {
  std::optional<std::string> config;
  std::optional<std::string> alpha, beta, sigma_s, sigma_c, tau, lambda_init, lambda_min, lambda_max, tol;
  std::optional<int> patch_radius, max_iters;
  bool no_adaptive = false;
  int threads = 1;

  void attach(CLI::App& cmd) {
    const SolverConfig d;
    cmd.add_option("--config", config, "key = value solver config file; flags override it");
    cmd.add_option("--alpha", alpha,
                   with_default("data/smoothness balance in (0,1)", "by factor: 2x 0.8, 4x 0.9, 8x 0.96, 16x 0.99"));
    cmd.add_option("--beta", beta, with_default("bandwidth smoothness weight", fmt(d.beta)));
    cmd.add_option("--sigma-s", sigma_s, with_default("spatial Gaussian sigma in pixels", fmt(d.sigma_s)));
    cmd.add_option("--sigma-c", sigma_c, with_default("color sigma, normalized units (fractions like 10/255 allowed)", "10/255"));
    cmd.add_option("--tau", tau, with_default("bandwidth step size", fmt(d.tau)));
    cmd.add_option("--lambda-init", lambda_init, with_default("initial bandwidth, normalized depth", "7/255"));
    cmd.add_option("--lambda-min", lambda_min, with_default("lower bandwidth clamp", "1/255"));
    cmd.add_option("--lambda-max", lambda_max, with_default("upper bandwidth clamp", "50/255"));
    cmd.add_option("--patch-radius", patch_radius, with_default("window radius (19x19 window = 9)", std::to_string(d.patch_radius)));
    cmd.add_option("--max-iters", max_iters, with_default("iteration budget", "by factor: 2x 5, 4x 15, 8x 50, 16x 100"));
    cmd.add_option("--tol", tol, with_default("stop when max |dD| falls below this", fmt(d.tol)));
    cmd.add_flag("--no-adaptive-bandwidth", no_adaptive, "keep the bandwidth fixed at --lambda-init");
    cmd.add_option("--threads", threads, with_default("worker threads (results do not depend on it)", "1"))
        ->check(CLI::PositiveNumber);
  }

  SolverConfig resolve() const {
    SolverConfig cfg = config ? load_config(*config) : SolverConfig{};
    auto set = [](const std::optional<std::string>& text, double& field) {
      if (text) field = parse_scalar(*text);
    };
    if (alpha) cfg.alpha = parse_scalar(*alpha);
    set(beta, cfg.beta);
    set(sigma_s, cfg.sigma_s);
    set(sigma_c, cfg.sigma_c);
    set(tau, cfg.tau);
    set(lambda_init, cfg.lambda_init);
    set(lambda_min, cfg.lambda_min);
    set(lambda_max, cfg.lambda_max);
    set(tol, cfg.tol);
    if (patch_radius) cfg.patch_radius = *patch_radius;
    if (max_iters) cfg.max_iters = *max_iters;
    if (no_adaptive) cfg.adaptive_bandwidth = false;
    cfg.threads = threads;
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("invalid ") + what + " '" + text + "'");
}

DepthFile read_any_depth(const std::string& path) { return read_depth(path, detect_depth_encoding(path)); }

void write_json(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << j.dump(2) << "\n";
}

struct UpsampleArgs {
  std::string depth_in, guide_in, out;
  std::optional<int> factor;
  std::string method = "ours";
  std::optional<std::string> report, bandwidth_out;
  bool resample_guide = false;
};

int cmd_upsample(const UpsampleArgs& a, const SolverFlags& flags, std::ostream& out) {
  const Method method = parse_method(a.method);
  const DepthFile low = read_any_depth(a.depth_in);
  const ColorImage raw_guide = read_color(a.guide_in);
  const ColorImage guide = a.resample_guide ? resample_guide_to_multiple(raw_guide, low.depth.shape()) : raw_guide;
  const int factor = upsampling_factor(low.depth.shape(), guide.shape());
  if (a.factor && *a.factor != factor) {
    throw ConfigError("--factor " + std::to_string(*a.factor) + " does not match the input sizes (factor " +
                      std::to_string(factor) + ")");
  }
  const SolverConfig cfg = flags.resolve().resolved_for_factor(factor);
  if (a.bandwidth_out && method != Method::ours) throw ConfigError("--bandwidth-out needs --method ours");

  nlohmann::ordered_json report;
  report["method"] = to_string(method);
  report["factor"] = factor;
  report["alpha"] = cfg.alpha_value();
  report["max_iters"] = *cfg.max_iters;
  DepthMap result = low.depth;
  double seconds = 0.0;
  switch (method) {
    case Method::ours: {
      UpsampleResult res = upsample(low.depth, guide, cfg);
      if (a.bandwidth_out) write_bandwidth_visual(res.bandwidth, *a.bandwidth_out, cfg.lambda_min, cfg.lambda_max);
      report["iterations"] = res.report.iterations_run;
      report["converged"] = res.report.converged;
      report["final_objective"] = res.report.final_objective;
      report["objective_trace"] = res.report.objective_trace;
      seconds = res.report.wall_time;
      result = std::move(res.depth);
      break;
    }
    case Method::mrf: {
      MrfResult res = mrf_upsample(low.depth, guide, cfg);
      report["iterations"] = res.report.iterations_run;
      report["converged"] = res.report.converged;
      report["final_objective"] = res.report.final_objective;
      report["objective_trace"] = res.report.objective_trace;
      seconds = res.report.wall_time;
      result = std::move(res.depth);
      break;
    }
    case Method::bicubic:
      result = bicubic_upsample(low.depth, factor);
      report["iterations"] = 0;
      report["converged"] = true;
      break;
  }
  write_depth(result, a.out, low.encoding);
  if (a.report) write_json(report, *a.report);
  out << "method " << to_string(method) << ", factor " << factor << ", alpha " << fmt(cfg.alpha_value())
      << ", iterations " << report["iterations"].get<int>() << (report["converged"].get<bool>() ? " (converged)" : "")
      << ", " << std::fixed << std::setprecision(2) << seconds << " s\n";
  return 0;
}

struct DegradeArgs {
  std::string in, out;
  int factor = 4;
  std::string noise_sigma = "0";
  std::uint64_t seed = 0;
};

int cmd_degrade(const DegradeArgs& a, std::ostream& out) {
  const DepthFile gt = read_any_depth(a.in);
  const DegradeSpec spec{a.factor, parse_scalar(a.noise_sigma), a.seed};
  const DepthMap cropped = center_crop(gt.depth, a.factor);
  const DepthMap low = degrade(cropped, spec);
  write_depth(low, a.out, gt.encoding);
  out << "degraded " << gt.depth.height() << "x" << gt.depth.width() << " -> " << low.height() << "x" << low.width()
      << "\n";
  return 0;
}

int cmd_evaluate(const std::string& estimate, const std::string& truth, std::ostream& out) {
  const DepthFile est = read_any_depth(estimate);
  const DepthFile gt = read_any_depth(truth);
  out << "rmse_255 " << std::fixed << std::setprecision(4) << rmse(est.depth, gt.depth) << "\n";
  if (gt.encoding.kind == DepthKind::float_map) {
    out << "rmse_mm " << rmse(est.depth, gt.depth, RmseScale::millimeters(gt.encoding.max_mm)) << "\n";
  }
  return 0;
}

struct BenchArgs {
  std::optional<std::string> dataset;
  bool synthetic = false;
  std::string factors = "2,4,8,16";
  std::string methods = "bicubic,mrf,ours";
  std::string noise_sigma = "5/255";
  std::uint64_t seed = 42;
  std::optional<std::string> report;
  bool timing = false;
};

int cmd_bench(const BenchArgs& a, const SolverFlags& flags, std::ostream& out, std::ostream& err) {
  if (a.synthetic == a.dataset.has_value()) throw ConfigError("give either a dataset directory or --synthetic");
  BenchOptions options;
  options.factors.clear();
  for (const auto& f : split_list(a.factors)) options.factors.push_back(parse_int(f, "factor"));
  options.methods.clear();
  for (const auto& m : split_list(a.methods)) options.methods.push_back(parse_method(m));
  if (options.factors.empty() || options.methods.empty()) throw ConfigError("--factors and --methods must not be empty");
  options.solver = flags.resolve();
  options.degrade.noise_sigma = parse_scalar(a.noise_sigma);
  options.degrade.rng_seed = a.seed;
  options.record_timing = a.timing;
  if (a.report) options.report_dir = *a.report;

  const std::vector<BenchResult> results = a.synthetic ? run_benchmark(synthetic_bench_scenes(), options)
                                                       : run_benchmark(std::filesystem::path(*a.dataset), options);
  if (results.empty()) {
    err << "warning: no scenes found\n";
    return 0;
  }
  out << format_table(results);
  const bool all_failed =
      std::all_of(results.begin(), results.end(), [](const BenchResult& r) { return r.error.has_value(); });
  return all_failed ? 1 : 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 1;
  int size = 8;
  bool flip = false;
};

int cmd_gradcheck(const GradcheckArgs& a, const SolverFlags& flags, std::ostream& out) {
  if (a.size < 1 || a.size > 32) throw ConfigError("--size must be in [1, 32]");
  SolverConfig cfg = flags.resolve();
  if (!cfg.alpha) cfg.alpha = default_alpha_for_factor(4);
  const RandomProblem problem = random_problem({a.size, a.size}, a.seed, cfg);
  const auto sign = a.flip ? RegularizerSign::flipped : RegularizerSign::true_gradient;
  const GradientCheck check = check_bandwidth_gradient(problem, cfg, sign);
  constexpr double kLimit = 1e-4;
  out << "max relative error " << std::scientific << std::setprecision(3) << check.max_rel_error << " at ("
      << check.worst.row << ", " << check.worst.col << "), limit " << kLimit << "\n";
  return check.max_rel_error < kLimit ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-guided depth map upsampling with an adaptive robust error norm"};
  app.name("depthup");
  app.require_subcommand(1);
  app.set_version_flag("--version", "depthup 0.1.0");

  SolverFlags solver_flags;

  UpsampleArgs up;
  auto* upsample_cmd = app.add_subcommand("upsample", "Upsample a low-resolution depth map guided by a color image");
  upsample_cmd->add_option("depth", up.depth_in, "low-resolution depth (PGM or PFM)")->required();
  upsample_cmd->add_option("guide", up.guide_in, "high-resolution color guide (PPM)")->required();
  upsample_cmd->add_option("output", up.out, "output depth, written in the input's encoding")->required();
  upsample_cmd->add_option("--factor", up.factor, "expected upsampling factor (checked against the input sizes)");
  upsample_cmd->add_option("--method", up.method, with_default("ours, mrf or bicubic", "ours"))
      ->check(CLI::IsMember({"ours", "mrf", "bicubic"}));
  upsample_cmd->add_option("--report", up.report, "write a JSON run report here");
  upsample_cmd->add_option("--bandwidth-out", up.bandwidth_out, "write the final bandwidth field as an 8-bit PGM");
  upsample_cmd->add_flag("--resample-guide", up.resample_guide,
                         "resize the guide to the nearest integer multiple of the depth size (output takes that size)");
  solver_flags.attach(*upsample_cmd);

  DegradeArgs deg;
  auto* degrade_cmd = app.add_subcommand("degrade", "Block-average downsample and add seeded Gaussian noise");
  degrade_cmd->add_option("input", deg.in, "ground-truth depth (PGM or PFM)")->required();
  degrade_cmd->add_option("output", deg.out, "degraded depth, same encoding")->required();
  degrade_cmd->add_option("--factor", deg.factor, with_default("downsampling factor", "4"))->check(CLI::PositiveNumber);
  degrade_cmd->add_option("--noise-sigma", deg.noise_sigma, with_default("noise sigma, normalized depth", "0"));
  degrade_cmd->add_option("--seed", deg.seed, with_default("noise seed", "0"));

  std::string eval_estimate, eval_truth;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "RMSE of an estimate against ground truth");
  evaluate_cmd->add_option("estimate", eval_estimate, "estimated depth")->required();
  evaluate_cmd->add_option("truth", eval_truth, "ground-truth depth")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Degrade, upsample and score every scene x factor x method");
  bench_cmd->add_option("dataset", bench.dataset, "directory of scenes (depth.pgm|depth.pfm + color.ppm each)");
  bench_cmd->add_flag("--synthetic", bench.synthetic, "run the built-in synthetic probe scenes");
  bench_cmd->add_option("--factors", bench.factors, with_default("comma-separated factors", bench.factors));
  bench_cmd->add_option("--methods", bench.methods, with_default("comma-separated methods", bench.methods));
  bench_cmd->add_option("--noise-sigma", bench.noise_sigma, with_default("noise sigma, normalized depth", bench.noise_sigma));
  bench_cmd->add_option("--seed", bench.seed, with_default("base noise seed", std::to_string(bench.seed)));
  bench_cmd->add_option("--report", bench.report, "directory for results.ndjson and table.txt");
  bench_cmd->add_flag("--timing", bench.timing, "record wall time per run (reports are then not byte-identical)");
  solver_flags.attach(*bench_cmd);

  GradcheckArgs gc;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Check the bandwidth gradient against finite differences");
  gradcheck_cmd->add_option("--seed", gc.seed, with_default("instance seed", "1"));
  gradcheck_cmd->add_option("--size", gc.size, with_default("instance side length (<= 32)", "8"));
  gradcheck_cmd->add_flag("--flip-regularizer", gc.flip, "debug: use the wrong sign for the regularizer term");
  solver_flags.attach(*gradcheck_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*upsample_cmd) return cmd_upsample(up, solver_flags, out);
    if (*degrade_cmd) return cmd_degrade(deg, out);
    if (*evaluate_cmd) return cmd_evaluate(eval_estimate, eval_truth, out);
    if (*bench_cmd) return cmd_bench(bench, solver_flags, out, err);
    if (*gradcheck_cmd) return cmd_gradcheck(gc, solver_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace depthup::cli
