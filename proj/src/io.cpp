#include "depthup/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace depthup {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw IoError("'" + path.string() + "' is empty");
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& header, const std::vector<unsigned char>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

/// Cursor over an ASCII netpbm/PFM header.
class HeaderReader {
 public:
  HeaderReader(const std::vector<unsigned char>& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  std::string magic() {
    if (bytes_.size() < 2) fail("truncated header");
    pos_ = 2;
    return std::string(bytes_.begin(), bytes_.begin() + 2);
  }

  std::string token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    if (start == pos_) fail("truncated header");
    return std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
  }

  long positive_integer(const char* what) {
    const std::string t = token();
    long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || v <= 0) fail(std::string("invalid ") + what + " '" + t + "'");
    return v;
  }

  /// Consumes the single whitespace byte separating header and raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing separator before raster data");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& what) const { throw IoError("'" + name_ + "': " + what); }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

struct Netpbm {
  GridShape shape;
  std::uint32_t maxval = 0;
  int channels = 1;
  std::vector<std::uint32_t> samples;
};

Netpbm read_netpbm(const std::filesystem::path& path, const char* expected_magic, int channels) {
  const auto bytes = read_file(path);
  HeaderReader header(bytes, path.string());
  const std::string magic = header.magic();
  if (magic != expected_magic) header.fail("expected " + std::string(expected_magic) + " file, found '" + magic + "'");
  Netpbm img;
  img.channels = channels;
  const long width = header.positive_integer("width");
  const long height = header.positive_integer("height");
  const long maxval = header.positive_integer("maxval");
  if (maxval > 65535) header.fail("maxval above 65535");
  if (width > std::numeric_limits<int>::max() || height > std::numeric_limits<int>::max()) header.fail("image too large");
  img.shape = {static_cast<int>(height), static_cast<int>(width)};
  img.maxval = static_cast<std::uint32_t>(maxval);
  const std::size_t start = header.raster_start();
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = img.shape.size() * static_cast<std::size_t>(channels);
  if (bytes.size() - start < count * bytes_per_sample) header.fail("truncated raster data");
  img.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = 0;
    if (bytes_per_sample == 1) {
      v = bytes[start + i];
    } else {
      v = (static_cast<std::uint32_t>(bytes[start + 2 * i]) << 8) | bytes[start + 2 * i + 1];
    }
    if (v > img.maxval) header.fail("sample " + std::to_string(v) + " exceeds maxval " + std::to_string(img.maxval));
    img.samples[i] = v;
  }
  return img;
}

std::string netpbm_header(const char* magic, GridShape shape, std::uint32_t maxval) {
  return std::string(magic) + "\n" + std::to_string(shape.width) + " " + std::to_string(shape.height) + "\n" +
         std::to_string(maxval) + "\n";
}

void append_sample(std::vector<unsigned char>& body, std::uint32_t v, std::uint32_t maxval) {
  if (maxval > 255) body.push_back(static_cast<unsigned char>(v >> 8));
  body.push_back(static_cast<unsigned char>(v & 0xFF));
}

DepthFile read_pfm(const std::filesystem::path& path, double declared_max_mm) {
  const auto bytes = read_file(path);
  HeaderReader header(bytes, path.string());
  if (header.magic() != "Pf") header.fail("expected single-channel PFM ('Pf')");
  const long width = header.positive_integer("width");
  const long height = header.positive_integer("height");
  const std::string scale_token = header.token();
  double scale = 0.0;
  const auto res = std::from_chars(scale_token.data(), scale_token.data() + scale_token.size(), scale);
  if (res.ec != std::errc() || !std::isfinite(scale) || scale == 0.0) header.fail("invalid scale '" + scale_token + "'");
  const bool little_endian = scale < 0.0;
  const double max_mm = declared_max_mm > 0.0 ? declared_max_mm : std::abs(scale);
  const GridShape shape{static_cast<int>(height), static_cast<int>(width)};
  const std::size_t start = header.raster_start();
  if (bytes.size() - start < shape.size() * 4) header.fail("truncated raster data");

  std::vector<double> values(shape.size());
  for (int row = 0; row < shape.height; ++row) {
    // PFM rows run bottom to top.
    const int dst_row = shape.height - 1 - row;
    for (int col = 0; col < shape.width; ++col) {
      const std::size_t at = start + 4 * (static_cast<std::size_t>(row) * shape.width + col);
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const std::uint32_t byte = bytes[at + b];
        bits |= little_endian ? byte << (8 * b) : byte << (8 * (3 - b));
      }
      const float v = std::bit_cast<float>(bits);
      if (!std::isfinite(v)) header.fail("non-finite sample");
      const double normalized = static_cast<double>(v) / max_mm;
      if (normalized < 0.0 || normalized > 1.0) {
        header.fail("sample " + std::to_string(v) + " outside [0, " + std::to_string(max_mm) + "]");
      }
      values[static_cast<std::size_t>(dst_row) * shape.width + col] = normalized;
    }
  }
  return DepthFile{DepthMap(shape, std::move(values)), DepthEncoding::float_map(max_mm)};
}

void write_pfm(const DepthMap& depth, const std::filesystem::path& path, double max_mm) {
  if (!(max_mm > 0.0)) max_mm = 1.0;
  std::ostringstream header;
  header << "Pf\n" << depth.width() << " " << depth.height() << "\n" << std::setprecision(17) << -max_mm << "\n";
  std::vector<unsigned char> body;
  body.reserve(depth.size() * 4);
  for (int row = depth.height() - 1; row >= 0; --row) {
    for (int col = 0; col < depth.width(); ++col) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(depth(row, col) * max_mm));
      for (int b = 0; b < 4; ++b) body.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFF));
    }
  }
  write_file(path, header.str(), body);
}

}  // namespace

DepthEncoding detect_depth_encoding(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  HeaderReader header(bytes, path.string());
  const std::string magic = header.magic();
  if (magic == "Pf") return DepthEncoding::float_map();
  if (magic != "P5") header.fail("unsupported depth format '" + magic + "'");
  header.positive_integer("width");
  header.positive_integer("height");
  return header.positive_integer("maxval") > 255 ? DepthEncoding::gray16() : DepthEncoding::gray8();
}

DepthFile read_depth(const std::filesystem::path& path, DepthEncoding encoding) {
  if (encoding.kind == DepthKind::float_map) return read_pfm(path, encoding.max_mm);

  const Netpbm img = read_netpbm(path, "P5", 1);
  const bool wide = img.maxval > 255;
  if (wide != (encoding.kind == DepthKind::gray16)) {
    throw IoError("'" + path.string() + "': sample width does not match the declared " +
                  (encoding.kind == DepthKind::gray16 ? "gray16" : "gray8") + " encoding");
  }
  return DepthFile{normalize_depth(img.samples, img.shape, encoding.max_code), encoding};
}

void write_depth(const DepthMap& depth, const std::filesystem::path& path, DepthEncoding encoding) {
  if (encoding.kind == DepthKind::float_map) {
    write_pfm(depth, path, encoding.max_mm);
    return;
  }
  const std::uint32_t max_code = encoding.kind == DepthKind::gray16 ? 65535u : 255u;
  std::vector<unsigned char> body;
  body.reserve(depth.size() * (max_code > 255 ? 2 : 1));
  for (std::uint32_t code : denormalize_depth(depth, max_code)) append_sample(body, code, max_code);
  write_file(path, netpbm_header("P5", depth.shape(), max_code), body);
}

ColorImage read_color(const std::filesystem::path& path) {
  const Netpbm img = read_netpbm(path, "P6", 3);
  std::vector<double> values(img.samples.size());
  const double scale = static_cast<double>(img.maxval);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(img.samples[i]) / scale;
  return ColorImage(img.shape, std::move(values));
}

void write_color(const ColorImage& image, const std::filesystem::path& path) {
  std::vector<unsigned char> body;
  body.reserve(image.values().size());
  for (double v : image.values()) body.push_back(static_cast<unsigned char>(quantize_half_up(v, 255)));
  write_file(path, netpbm_header("P6", image.shape(), 255), body);
}

void write_bandwidth_visual(const BandwidthField& bandwidth, const std::filesystem::path& path, double lambda_min,
                            double lambda_max) {
  if (!(lambda_max > lambda_min)) throw DomainError("lambda_max must exceed lambda_min");
  std::vector<unsigned char> body;
  body.reserve(bandwidth.grid().size());
  for (double l : bandwidth.values()) {
    const double t = std::clamp((l - lambda_min) / (lambda_max - lambda_min), 0.0, 1.0);
    body.push_back(static_cast<unsigned char>(quantize_half_up(t, 255)));
  }
  write_file(path, netpbm_header("P5", bandwidth.shape(), 255), body);
}

double parse_scalar(std::string_view text) {
  auto parse_number = [&](std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("invalid number '" + std::string(text) + "'");
    }
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_number(text);
  const double den = parse_number(text.substr(slash + 1));
  if (den == 0.0) throw ConfigError("division by zero in '" + std::string(text) + "'");
  return parse_number(text.substr(0, slash)) / den;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int parse_int(std::string_view text) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("invalid integer '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "'");
}

void assign(SolverConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "alpha") cfg.alpha = parse_scalar(value);
  else if (key == "beta") cfg.beta = parse_scalar(value);
  else if (key == "sigma_s") cfg.sigma_s = parse_scalar(value);
  else if (key == "sigma_c") cfg.sigma_c = parse_scalar(value);
  else if (key == "patch_radius") cfg.patch_radius = parse_int(value);
  else if (key == "lambda_init") cfg.lambda_init = parse_scalar(value);
  else if (key == "tau") cfg.tau = parse_scalar(value);
  else if (key == "lambda_min") cfg.lambda_min = parse_scalar(value);
  else if (key == "lambda_max") cfg.lambda_max = parse_scalar(value);
  else if (key == "max_iters") cfg.max_iters = parse_int(value);
  else if (key == "tol") cfg.tol = parse_scalar(value);
  else if (key == "adaptive_bandwidth") cfg.adaptive_bandwidth = parse_bool(value);
  else if (key == "threads") cfg.threads = parse_int(value);
  else throw ConfigError("unknown key '" + std::string(key) + "'");
}

}  // namespace

SolverConfig parse_config(std::string_view text) {
  SolverConfig cfg;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string prefix = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(prefix + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      assign(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(prefix + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

SolverConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const SolverConfig& cfg) {
  std::ostringstream out;
  out << std::setprecision(17);
  if (cfg.alpha) out << "alpha = " << *cfg.alpha << "\n";
  out << "beta = " << cfg.beta << "\n"
      << "sigma_s = " << cfg.sigma_s << "\n"
      << "sigma_c = " << cfg.sigma_c << "\n"
      << "patch_radius = " << cfg.patch_radius << "\n"
      << "lambda_init = " << cfg.lambda_init << "\n"
      << "tau = " << cfg.tau << "\n"
      << "lambda_min = " << cfg.lambda_min << "\n"
      << "lambda_max = " << cfg.lambda_max << "\n";
  if (cfg.max_iters) out << "max_iters = " << *cfg.max_iters << "\n";
  out << "tol = " << cfg.tol << "\n"
      << "adaptive_bandwidth = " << (cfg.adaptive_bandwidth ? "true" : "false") << "\n"
      << "threads = " << cfg.threads << "\n";
  return out.str();
}

void save_config(const SolverConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << format_config(cfg);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace depthup
