#include "depthup/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "depthup/io.hpp"

namespace depthup {

namespace {

GridShape cropped_shape(GridShape shape, int multiple) {
  if (multiple < 1) throw DomainError("crop multiple must be >= 1");
  const GridShape out{shape.height / multiple * multiple, shape.width / multiple * multiple};
  if (!out.valid()) throw DimensionError("image smaller than the upsampling factor");
  return out;
}

}  // namespace

DepthMap center_crop(const DepthMap& map, int multiple) {
  const GridShape out = cropped_shape(map.shape(), multiple);
  if (out == map.shape()) return map;
  const int top = (map.height() - out.height) / 2;
  const int left = (map.width() - out.width) / 2;
  ScalarGrid grid(out);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) grid(r, c) = map(top + r, left + c);
  return DepthMap(std::move(grid));
}

ColorImage center_crop(const ColorImage& image, int multiple) {
  const GridShape out = cropped_shape(image.shape(), multiple);
  if (out == image.shape()) return image;
  const int top = (image.height() - out.height) / 2;
  const int left = (image.width() - out.width) / 2;
  std::vector<double> values;
  values.reserve(3 * out.size());
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      const auto rgb = image(top + r, left + c);
      values.insert(values.end(), rgb.begin(), rgb.end());
    }
  return ColorImage(out, std::move(values));
}

ColorImage resample_guide_to_multiple(const ColorImage& guide, GridShape low) {
  require_valid(low);
  const double ratio = 0.5 * (static_cast<double>(guide.height()) / low.height + static_cast<double>(guide.width()) / low.width);
  const int factor = std::max(1, static_cast<int>(std::lround(ratio)));
  const GridShape out{low.height * factor, low.width * factor};
  if (out == guide.shape()) return guide;
  const double sy = static_cast<double>(guide.height()) / out.height;
  const double sx = static_cast<double>(guide.width()) / out.width;
  std::vector<double> values;
  values.reserve(3 * out.size());
  for (int r = 0; r < out.height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, guide.height() - 1.0);
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, guide.height() - 1);
    const double ty = y - y0;
    for (int c = 0; c < out.width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, guide.width() - 1.0);
      const int x0 = static_cast<int>(x);
      const int x1 = std::min(x0 + 1, guide.width() - 1);
      const double tx = x - x0;
      for (int k = 0; k < 3; ++k) {
        const double top = (1 - tx) * guide.channel(y0, x0, k) + tx * guide.channel(y0, x1, k);
        const double bottom = (1 - tx) * guide.channel(y1, x0, k) + tx * guide.channel(y1, x1, k);
        values.push_back(std::clamp((1 - ty) * top + ty * bottom, 0.0, 1.0));
      }
    }
  }
  return ColorImage(out, std::move(values));
}

DepthMap block_downsample(const DepthMap& map, int factor) {
  if (factor < 1) throw DomainError("downsampling factor must be >= 1");
  if (map.height() % factor != 0 || map.width() % factor != 0) {
    throw DimensionError("depth map " + std::to_string(map.height()) + "x" + std::to_string(map.width()) +
                         " is not divisible by factor " + std::to_string(factor));
  }
  if (factor == 1) return map;
  const GridShape out{map.height() / factor, map.width() / factor};
  ScalarGrid grid(out);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      double sum = 0.0;
      for (int y = 0; y < factor; ++y)
        for (int x = 0; x < factor; ++x) sum += map(r * factor + y, c * factor + x);
      grid(r, c) = std::clamp(sum * inv, 0.0, 1.0);
    }
  return DepthMap(std::move(grid));
}

DepthMap degrade(const DepthMap& ground_truth, const DegradeSpec& spec) {
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) throw DomainError("noise_sigma must be >= 0");
  DepthMap low = block_downsample(ground_truth, spec.factor);
  if (spec.noise_sigma == 0.0) return low;
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  std::vector<double> values(low.values().begin(), low.values().end());
  for (double& v : values) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return DepthMap(low.shape(), std::move(values));
}

double rmse(const DepthMap& a, const DepthMap& b, RmseScale scale) {
  require_same_shape(a.shape(), b.shape(), "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size())) * scale.multiplier();
}

std::string_view to_string(Texture t) {
  switch (t) {
    case Texture::none: return "none";
    case Texture::stripes: return "stripes";
    case Texture::checker: return "checker";
  }
  return "none";
}

Texture parse_texture(std::string_view name) {
  if (name == "none") return Texture::none;
  if (name == "stripes") return Texture::stripes;
  if (name == "checker") return Texture::checker;
  throw ConfigError("unknown texture '" + std::string(name) + "'");
}

int depth_edge_column(const SceneSpec& spec) { return spec.width / 2; }

int texture_phase(const SceneSpec& spec, int row, int col) {
  const int shift = static_cast<int>(spec.seed % kTexturePeriod);
  const int half = kTexturePeriod / 2;
  switch (spec.texture) {
    case Texture::none: return 0;
    case Texture::stripes: return ((col + shift) / half) % 2;
    case Texture::checker: return ((row + shift) / half + (col + shift) / half) % 2;
  }
  return 0;
}

Scene make_synthetic_scene(const SceneSpec& spec) {
  const GridShape shape{spec.height, spec.width};
  require_valid(shape);
  if (std::abs(spec.edge_offset_px) >= std::max(spec.width / 4, 1)) {
    throw DomainError("edge_offset_px must be smaller than width / 4");
  }
  const double high = spec.base_depth + spec.depth_step;
  if (spec.base_depth < 0.0 || high > 1.0 || spec.depth_step < 0.0) throw DomainError("scene depth leaves [0,1]");

  constexpr ColorImage::Rgb kLeft{0.30, 0.40, 0.50};
  constexpr ColorImage::Rgb kRight{0.60, 0.50, 0.35};
  constexpr double kTextureContrast = 0.3;

  const int depth_edge = depth_edge_column(spec);
  const int color_edge = depth_edge + spec.edge_offset_px;
  ScalarGrid depth(shape);
  std::vector<double> color;
  color.reserve(3 * shape.size());
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      depth(r, c) = c < depth_edge ? spec.base_depth : high;
      const ColorImage::Rgb& base = (!spec.color_edge || c < color_edge) ? kLeft : kRight;
      const double lift = kTextureContrast * texture_phase(spec, r, c);
      for (double v : base) color.push_back(v + lift);
    }
  }
  return Scene{DepthMap(std::move(depth)), ColorImage(shape, std::move(color))};
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::bicubic: return "bicubic";
    case Method::mrf: return "mrf";
    case Method::ours: return "ours";
  }
  return "ours";
}

Method parse_method(std::string_view name) {
  if (name == "bicubic") return Method::bicubic;
  if (name == "mrf") return Method::mrf;
  if (name == "ours") return Method::ours;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected bicubic, mrf or ours)");
}

MethodRun run_method(Method method, const DepthMap& low, const ColorImage& guide, const SolverConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  switch (method) {
    case Method::bicubic: {
      const int factor = upsampling_factor(low.shape(), guide.shape());
      DepthMap up = bicubic_upsample(low, factor);
      return {std::move(up), 0, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), true};
    }
    case Method::mrf: {
      MrfResult res = mrf_upsample(low, guide, cfg);
      return {std::move(res.depth), res.report.iterations_run, res.report.wall_time, res.report.converged};
    }
    case Method::ours: {
      UpsampleResult res = upsample(low, guide, cfg);
      return {std::move(res.depth), res.report.iterations_run, res.report.wall_time, res.report.converged};
    }
  }
  throw ConfigError("unknown method");
}

namespace {

/// FNV-1a, so per-scene seeds do not depend on the standard library's hash.
std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void write_outputs(const std::vector<BenchResult>& results, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream ndjson(dir / "results.ndjson", std::ios::trunc);
  if (!ndjson) throw IoError("cannot write '" + (dir / "results.ndjson").string() + "'");
  write_report_ndjson(ndjson, results);
  std::ofstream table(dir / "table.txt", std::ios::trunc);
  if (!table) throw IoError("cannot write '" + (dir / "table.txt").string() + "'");
  table << format_table(results);
}

BenchResult error_row(const std::string& scene, const std::string& message) {
  BenchResult row;
  row.scene = scene;
  row.error = message;
  return row;
}

void bench_scene(const NamedScene& scene, const BenchOptions& options, std::vector<BenchResult>& out) {
  std::vector<int> factors = options.factors;
  std::sort(factors.begin(), factors.end());
  factors.erase(std::unique(factors.begin(), factors.end()), factors.end());
  for (int factor : factors) {
    const DepthMap truth = center_crop(scene.depth, factor);
    const ColorImage guide = center_crop(scene.color, factor);
    DegradeSpec spec = options.degrade;
    spec.factor = factor;
    spec.rng_seed = options.degrade.rng_seed ^ (stable_hash(scene.name) + static_cast<std::uint64_t>(factor));
    const DepthMap low = degrade(truth, spec);
    for (Method method : options.methods) {
      const MethodRun run = run_method(method, low, guide, options.solver);
      BenchResult row;
      row.scene = scene.name;
      row.factor = factor;
      row.method = std::string(to_string(method));
      row.rmse_255 = rmse(run.depth, truth);
      if (scene.max_mm) row.rmse_mm = rmse(run.depth, truth, RmseScale::millimeters(*scene.max_mm));
      row.iterations = run.iterations;
      if (options.record_timing) row.seconds = run.seconds;
      out.push_back(std::move(row));
    }
  }
}

std::vector<BenchResult> bench_sorted(std::vector<const NamedScene*> scenes, const std::vector<BenchResult>& load_errors,
                                      const BenchOptions& options) {
  std::vector<BenchResult> results = load_errors;
  for (const NamedScene* scene : scenes) {
    std::vector<BenchResult> rows;
    try {
      bench_scene(*scene, options, rows);
    } catch (const Error& e) {
      rows = {error_row(scene->name, e.what())};
    }
    results.insert(results.end(), rows.begin(), rows.end());
  }
  std::stable_sort(results.begin(), results.end(), [](const BenchResult& a, const BenchResult& b) {
    if (a.scene != b.scene) return a.scene < b.scene;
    return a.factor < b.factor;
  });
  if (options.report_dir) write_outputs(results, *options.report_dir);
  return results;
}

}  // namespace

std::vector<BenchResult> run_benchmark(const std::vector<NamedScene>& scenes, const BenchOptions& options) {
  std::vector<const NamedScene*> ptrs;
  for (const NamedScene& s : scenes) ptrs.push_back(&s);
  return bench_sorted(ptrs, {}, options);
}

std::vector<BenchResult> run_benchmark(const std::filesystem::path& dataset_dir, const BenchOptions& options) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dataset_dir, ec)) {
    throw IoError("dataset directory '" + dataset_dir.string() + "' is not readable");
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(dataset_dir)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<NamedScene> scenes;
  std::vector<BenchResult> load_errors;
  for (const auto& dir : dirs) {
    const std::string name = dir.filename().string();
    try {
      std::filesystem::path depth_path = dir / "depth.pgm";
      if (!std::filesystem::exists(depth_path)) depth_path = dir / "depth.pfm";
      if (!std::filesystem::exists(depth_path)) throw IoError("missing depth.pgm / depth.pfm");
      const DepthFile depth = read_depth(depth_path, detect_depth_encoding(depth_path));
      ColorImage color = read_color(dir / "color.ppm");
      require_same_shape(depth.depth.shape(), color.shape(), "scene depth vs color");
      std::optional<double> max_mm;
      if (depth.encoding.kind == DepthKind::float_map) max_mm = depth.encoding.max_mm;
      scenes.push_back(NamedScene{name, depth.depth, std::move(color), max_mm});
    } catch (const Error& e) {
      load_errors.push_back(error_row(name, e.what()));
    }
  }
  std::vector<const NamedScene*> ptrs;
  for (const NamedScene& s : scenes) ptrs.push_back(&s);
  return bench_sorted(ptrs, load_errors, options);
}

std::vector<NamedScene> synthetic_bench_scenes() {
  struct Probe {
    const char* name;
    SceneSpec spec;
  };
  const double step = 50.0 / 255.0;
  const std::vector<Probe> probes{
      {"aligned_step", {.depth_step = step}},
      {"checker_step", {.depth_step = step, .texture = Texture::checker}},
      {"misaligned_step", {.depth_step = step, .edge_offset_px = 12}},
      {"no_color_edge", {.depth_step = step, .color_edge = false}},
      {"striped_flat", {.depth_step = 0.0, .texture = Texture::stripes}},
  };
  std::vector<NamedScene> scenes;
  for (const Probe& p : probes) {
    Scene s = make_synthetic_scene(p.spec);
    scenes.push_back(NamedScene{p.name, std::move(s.depth), std::move(s.color), std::nullopt});
  }
  return scenes;
}

void write_report_ndjson(std::ostream& out, const std::vector<BenchResult>& results) {
  for (const BenchResult& r : results) {
    nlohmann::ordered_json j;
    j["scene"] = r.scene;
    if (r.error) {
      j["error"] = *r.error;
    } else {
      j["factor"] = r.factor;
      j["method"] = r.method;
      j["rmse_255"] = r.rmse_255;
      j["rmse_mm"] = r.rmse_mm ? nlohmann::ordered_json(*r.rmse_mm) : nlohmann::ordered_json(nullptr);
      j["iterations"] = r.iterations;
      j["seconds"] = r.seconds ? nlohmann::ordered_json(*r.seconds) : nlohmann::ordered_json(nullptr);
    }
    out << j.dump() << "\n";
  }
}

std::string format_table(const std::vector<BenchResult>& results) {
  std::vector<std::string> scenes;
  std::vector<std::string> methods;
  std::set<int> factor_set;
  std::map<std::tuple<std::string, int, std::string>, double> cells;
  std::vector<std::string> errors;
  for (const BenchResult& r : results) {
    if (r.error) {
      errors.push_back(r.scene + ": " + *r.error);
      continue;
    }
    if (std::find(scenes.begin(), scenes.end(), r.scene) == scenes.end()) scenes.push_back(r.scene);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    factor_set.insert(r.factor);
    cells[{r.scene, r.factor, r.method}] = r.rmse_mm ? *r.rmse_mm : r.rmse_255;
  }
  const std::vector<int> factors(factor_set.begin(), factor_set.end());
  constexpr int kCell = 8;
  constexpr int kLabel = 10;
  std::size_t longest = 0;
  for (const auto& s : scenes) longest = std::max(longest, s.size());
  const int group = std::max(kCell * static_cast<int>(factors.size()), static_cast<int>(longest) + 1);

  std::ostringstream out;
  if (!scenes.empty()) {
    out << std::left << std::setw(kLabel) << "RMSE" << "|";
    for (const auto& s : scenes) out << " " << std::left << std::setw(group - 1) << s << "|";
    out << "\n" << std::setw(kLabel) << "" << "|";
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      out << std::string(static_cast<std::size_t>(group - kCell * static_cast<int>(factors.size())), ' ');
      for (int f : factors) out << std::right << std::setw(kCell) << (std::to_string(f) + "x");
      out << "|";
    }
    out << "\n" << std::string(static_cast<std::size_t>(kLabel + 1 + (group + 1) * static_cast<int>(scenes.size())), '-') << "\n";
    for (const auto& m : methods) {
      out << std::left << std::setw(kLabel) << m << "|";
      for (const auto& s : scenes) {
        out << std::string(static_cast<std::size_t>(group - kCell * static_cast<int>(factors.size())), ' ');
        for (int f : factors) {
          const auto it = cells.find({s, f, m});
          std::ostringstream cell;
          if (it != cells.end()) cell << std::fixed << std::setprecision(2) << it->second;
          else cell << "-";
          out << std::right << std::setw(kCell) << cell.str();
        }
        out << "|";
      }
      out << "\n";
    }
  }
  for (const auto& e : errors) out << "error: " << e << "\n";
  return out.str();
}

}  // namespace depthup
