#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "depthup/image.hpp"
#include "depthup/solver.hpp"

namespace depthup {

enum class DepthKind { gray8, gray16, float_map };

/// How depth samples are stored on disk.
///
/// gray8 / gray16 are binary PGM (P5) with 1- or 2-byte samples, normalized by 255 or
/// 65535. float_map is PFM ("Pf", single channel): samples are depth units, normalized
/// by max_mm. On write the header scale is -max_mm (negative = little endian); on read a
/// max_mm of 0 means "take it from the header scale".
struct DepthEncoding {
  DepthKind kind = DepthKind::gray8;
  std::uint32_t max_code = 255;
  double max_mm = 0.0;

  static DepthEncoding gray8() { return {DepthKind::gray8, 255, 0.0}; }
  static DepthEncoding gray16() { return {DepthKind::gray16, 65535, 0.0}; }
  static DepthEncoding float_map(double max_mm = 0.0) { return {DepthKind::float_map, 0, max_mm}; }

  friend bool operator==(const DepthEncoding&, const DepthEncoding&) = default;
};

struct DepthFile {
  DepthMap depth;
  /// Encoding as read; for float maps max_mm is the resolved scale.
  DepthEncoding encoding;
};

/// Encoding implied by a file header (P5 maxval <= 255 -> gray8, else gray16; Pf -> float_map).
DepthEncoding detect_depth_encoding(const std::filesystem::path& path);

DepthFile read_depth(const std::filesystem::path& path, DepthEncoding encoding);
/// Integer encodings quantize with round-half-up; float maps store float32 samples.
void write_depth(const DepthMap& depth, const std::filesystem::path& path, DepthEncoding encoding);

/// Binary PPM (P6), 8- or 16-bit samples, normalized by the header maxval.
ColorImage read_color(const std::filesystem::path& path);
void write_color(const ColorImage& image, const std::filesystem::path& path);

/// Linear map [lambda_min, lambda_max] -> gray codes [0, 255], written as 8-bit PGM.
void write_bandwidth_visual(const BandwidthField& bandwidth, const std::filesystem::path& path, double lambda_min,
                            double lambda_max);

/// `key = value` lines, `#` comments. Unset keys keep their defaults; alpha and max_iters
/// stay unset unless given. Scalars accept fractions such as `10/255`.
SolverConfig parse_config(std::string_view text);
SolverConfig load_config(const std::filesystem::path& path);
std::string format_config(const SolverConfig& cfg);
void save_config(const SolverConfig& cfg, const std::filesystem::path& path);

/// Number or `a/b` fraction. Throws ConfigError on anything else.
double parse_scalar(std::string_view text);

}  // namespace depthup
