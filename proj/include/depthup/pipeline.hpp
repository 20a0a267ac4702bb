#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "depthup/image.hpp"
#include "depthup/solver.hpp"

namespace depthup {

struct DegradeSpec {
  int factor = 4;
  /// Standard deviation of additive Gaussian noise, normalized depth units.
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Largest centered crop whose dimensions are multiples of `multiple`.
DepthMap center_crop(const DepthMap& map, int multiple);
ColorImage center_crop(const ColorImage& image, int multiple);

/// Mean over non-overlapping factor x factor blocks.
DepthMap block_downsample(const DepthMap& map, int factor);

/// Guide resized to the nearest integer multiple of the depth grid (same factor on both
/// axes, rounded from the mean ratio) with bilinear sampling at pixel centers. Lets
/// real captures with a fractional scale (such as 6.25x) go through the integer solver.
ColorImage resample_guide_to_multiple(const ColorImage& guide, GridShape low);

/// Block-average downsample, add seeded i.i.d. Gaussian noise, clamp to [0,1].
/// Dimensions must be divisible by the factor (DimensionError otherwise).
DepthMap degrade(const DepthMap& ground_truth, const DegradeSpec& spec);

enum class RmseUnit { unit_255, millimeters };

struct RmseScale {
  RmseUnit unit = RmseUnit::unit_255;
  double max_mm = 0.0;

  static RmseScale unit255() { return {}; }
  static RmseScale millimeters(double max_mm) { return {RmseUnit::millimeters, max_mm}; }
  double multiplier() const { return unit == RmseUnit::unit_255 ? 255.0 : max_mm; }
};

/// sqrt(mean((a - b)^2)) times 255 or max_mm.
double rmse(const DepthMap& a, const DepthMap& b, RmseScale scale = RmseScale::unit255());

enum class Texture { none, stripes, checker };

std::string_view to_string(Texture t);
Texture parse_texture(std::string_view name);

/// Two-region piecewise-constant depth (vertical step at the image center) with an RGB
/// guide whose region boundary is shifted by edge_offset_px.
struct SceneSpec {
  int height = 128;
  int width = 128;
  double base_depth = 0.4;
  double depth_step = 50.0 / 255.0;
  int edge_offset_px = 0;
  Texture texture = Texture::none;
  /// false gives the guide a single flat color except for the texture.
  bool color_edge = true;
  /// Selects the texture phase.
  std::uint64_t seed = 0;
};

struct Scene {
  DepthMap depth;
  ColorImage color;
};

Scene make_synthetic_scene(const SceneSpec& spec);

/// Column where the depth steps from base_depth to base_depth + depth_step.
int depth_edge_column(const SceneSpec& spec);

/// Period (in pixels) of the stripe and checker textures; each band is half a period.
inline constexpr int kTexturePeriod = 8;

/// 0/1 texture indicator at a pixel for the given spec (0 everywhere for Texture::none).
int texture_phase(const SceneSpec& spec, int row, int col);

enum class Method { bicubic, mrf, ours };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct MethodRun {
  DepthMap depth;
  int iterations = 0;
  double seconds = 0.0;
  bool converged = true;
};

/// Upsample `low` to the guide resolution with one of the three in-repo methods.
MethodRun run_method(Method method, const DepthMap& low, const ColorImage& guide, const SolverConfig& cfg);

struct BenchResult {
  std::string scene;
  int factor = 0;
  std::string method;
  double rmse_255 = 0.0;
  std::optional<double> rmse_mm;
  int iterations = 0;
  /// Unset when timing is not recorded (keeps reports byte-reproducible).
  std::optional<double> seconds;
  /// Set when the scene could not be processed; the numeric fields are then meaningless.
  std::optional<std::string> error;
};

struct NamedScene {
  std::string name;
  DepthMap depth;
  ColorImage color;
  /// Depth units per normalized unit, for millimeter RMSE. Unset for code-scale data.
  std::optional<double> max_mm;
};

struct BenchOptions {
  std::vector<int> factors{2, 4, 8, 16};
  std::vector<Method> methods{Method::bicubic, Method::mrf, Method::ours};
  SolverConfig solver;
  /// Noise level and base seed; `factor` is ignored (taken from `factors`).
  DegradeSpec degrade;
  bool record_timing = false;
  /// When set, results.ndjson and table.txt are written here.
  std::optional<std::filesystem::path> report_dir;
};

/// Degrade / upsample / evaluate every scene x factor x method. Results are sorted by
/// scene, then factor, then method order in `options.methods`.
std::vector<BenchResult> run_benchmark(const std::vector<NamedScene>& scenes, const BenchOptions& options);

/// Same over a directory of scene folders, each holding depth.{pgm,pfm} and color.ppm.
/// Scenes that fail to load are recorded as error rows; the run continues.
std::vector<BenchResult> run_benchmark(const std::filesystem::path& dataset_dir, const BenchOptions& options);

/// Built-in synthetic probes used by `bench --synthetic`.
std::vector<NamedScene> synthetic_bench_scenes();

/// One JSON object per line: scene, factor, method, rmse_255, rmse_mm, iterations, seconds (+ error).
void write_report_ndjson(std::ostream& out, const std::vector<BenchResult>& results);
/// Methods as rows, scene x factor as columns.
std::string format_table(const std::vector<BenchResult>& results);

}  // namespace depthup
