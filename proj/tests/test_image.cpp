#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "depthup/image.hpp"
#include "oracle.hpp"

using namespace depthup;

TEST_SUITE("image") {

TEST_CASE("clamp_coord replicates the nearest valid pixel") {
  const GridShape s{10, 10};
  CHECK(clamp_coord(-3, 5, s) == Pixel{0, 5});
  CHECK(clamp_coord(4, 4, s) == Pixel{4, 4});
  CHECK(clamp_coord(12, -1, s) == Pixel{9, 0});
}

TEST_CASE("grid shapes must be non-empty") {
  CHECK_THROWS_AS(require_valid({0, 3}), DimensionError);
  CHECK_THROWS_AS(ScalarGrid(GridShape{3, 0}), DimensionError);
  CHECK_THROWS_AS(ScalarGrid(GridShape{2, 2}, std::vector<double>(3)), DimensionError);
  CHECK_THROWS_AS(require_same_shape({2, 3}, {3, 2}, "test"), DimensionError);
}

TEST_CASE("depth maps and color images reject values outside [0,1]") {
  CHECK_THROWS_AS(DepthMap(GridShape{1, 2}, std::vector<double>{0.5, 1.5}), InputRangeError);
  CHECK_THROWS_AS(DepthMap(GridShape{1, 1}, std::numeric_limits<double>::quiet_NaN()), InputRangeError);
  CHECK_THROWS_AS(DepthMap(GridShape{1, 1}, -0.1), InputRangeError);
  CHECK_THROWS_AS(ColorImage(GridShape{1, 1}, ColorImage::Rgb{0.1, 0.2, std::numeric_limits<double>::infinity()}),
                  InputRangeError);
  CHECK_THROWS_AS(ColorImage(GridShape{1, 2}, std::vector<double>(5, 0.5)), DimensionError);
  const DepthMap d(GridShape{2, 2}, 0.25);
  CHECK(d.with_value(3, 1.0)[3] == 1.0);
  CHECK_THROWS_AS(d.with_value(0, 2.0), InputRangeError);
}

TEST_CASE("normalize_depth examples") {
  const std::vector<std::uint32_t> full{255};
  CHECK(normalize_depth(full, {1, 1}, 255)[0] == 1.0);
  const std::vector<std::uint32_t> zero{0};
  CHECK(normalize_depth(zero, {1, 1}, 65535)[0] == 0.0);
  const std::vector<std::uint32_t> mid{128};
  CHECK(normalize_depth(mid, {1, 1}, 255)[0] == doctest::Approx(0.50196).epsilon(1e-5));
  CHECK(normalize_depth(mid, {1, 1}, 255)[0] == 128.0 / 255.0);
  const std::vector<std::uint32_t> over{256};
  CHECK_THROWS_AS(normalize_depth(over, {1, 1}, 255), InputRangeError);
  CHECK_THROWS_AS(normalize_depth(mid, {1, 1}, 0), InputRangeError);
}

TEST_CASE("integer codes survive normalize then denormalize") {
  for (std::uint32_t max_code : {255u, 65535u}) {
    std::vector<std::uint32_t> codes(max_code + 1);
    for (std::uint32_t i = 0; i <= max_code; ++i) codes[i] = i;
    const DepthMap d = normalize_depth(codes, {1, static_cast<int>(codes.size())}, max_code);
    CHECK(denormalize_depth(d, max_code) == codes);
  }
}

TEST_CASE("denormalize then normalize stays within half a code") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint32_t max_code : {255u, 65535u}) {
    std::vector<double> v(1000);
    for (double& x : v) x = u(rng);
    const DepthMap d({1, 1000}, v);
    const auto codes = denormalize_depth(d, max_code);
    const DepthMap back = normalize_depth(codes, d.shape(), max_code);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(back[i] - v[i]) <= 0.5 / max_code + 1e-15);
  }
}

TEST_CASE("quantization rounds half up") {
  CHECK(quantize_half_up(0.5, 255) == 128);
  CHECK(quantize_half_up(1.0, 255) == 255);
  CHECK(quantize_half_up(0.0, 65535) == 0);
  CHECK(quantize_half_up(0.5, 65535) == 32768);
}

TEST_CASE("neighborhood offsets") {
  const Neighborhood n(9);
  CHECK(n.size() == 361);
  CHECK(n.diameter() == 19);
  CHECK(n.offsets()[n.center_index()].dy == 0);
  CHECK(n.offsets()[n.center_index()].dx == 0);
  CHECK(n.offsets()[0].dy == -9);
  CHECK(n.offsets()[0].dx == -9);
  CHECK(n.offsets()[1].dx == -8);
  CHECK_THROWS_AS(Neighborhood(-1), DomainError);
}

TEST_CASE("every resolved neighbor lies inside the grid") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(1, 12);
  for (int trial = 0; trial < 30; ++trial) {
    const GridShape s{dim(rng), dim(rng)};
    const Neighborhood n(trial % 5);
    for (int r = 0; r < s.height; ++r)
      for (int c = 0; c < s.width; ++c)
        for (std::size_t k = 0; k < n.size(); ++k) {
          const Pixel p = n.resolve({r, c}, k, s);
          REQUIRE(p.row >= 0);
          REQUIRE(p.row < s.height);
          REQUIRE(p.col >= 0);
          REQUIRE(p.col < s.width);
        }
  }
}

TEST_CASE("cubic convolution weights at t = 0.5") {
  const auto w = cubic_convolution_weights(0.5);
  CHECK(w[0] == -0.0625);
  CHECK(w[1] == 0.5625);
  CHECK(w[2] == 0.5625);
  CHECK(w[3] == -0.0625);
}

TEST_CASE("cubic convolution weights sum to one and match the kernel formula") {
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    const auto w = cubic_convolution_weights(t);
    CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w[0] == doctest::Approx(oracle::cubic(t + 1)).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(oracle::cubic(t)).epsilon(1e-14));
    CHECK(w[2] == doctest::Approx(oracle::cubic(1 - t)).epsilon(1e-14));
    CHECK(w[3] == doctest::Approx(oracle::cubic(2 - t)).epsilon(1e-14));
  }
}

TEST_CASE("bicubic keeps constant maps constant") {
  const DepthMap c({5, 7}, 0.4);
  for (int f = 1; f <= 6; ++f) {
    const DepthMap up = bicubic_upsample(c, f);
    CHECK(up.shape() == GridShape{5 * f, 7 * f});
    for (double v : up.values()) REQUIRE(std::abs(v - 0.4) < 1e-15);
  }
}

TEST_CASE("bicubic with factor 1 is the identity") {
  std::mt19937_64 rng(11);
  const DepthMap d({6, 9}, oracle::uniform(54, rng));
  CHECK(bicubic_upsample(d, 1) == d);
  CHECK_THROWS_AS(bicubic_upsample(d, 0), DomainError);
}

TEST_CASE("bicubic reproduces affine ramps away from the border") {
  const int h = 12, w = 16;
  ScalarGrid g({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g(y, x) = 0.1 + 0.02 * x + 0.03 * y;
  const DepthMap src(std::move(g));
  for (int f : {2, 3, 4, 8}) {
    const DepthMap up = bicubic_upsample(src, f);
    // Exclude outputs whose taps reach past the first or last two source pixels.
    const int band = 2 * f;
    for (int y = band; y < h * f - band; ++y)
      for (int x = band; x < w * f - band; ++x) {
        const double sy = (y + 0.5) / f - 0.5, sx = (x + 0.5) / f - 0.5;
        REQUIRE(std::abs(up(y, x) - (0.1 + 0.02 * sx + 0.03 * sy)) < 1e-12);
      }
  }
}

TEST_CASE("bicubic matches a direct per-pixel evaluation") {
  std::mt19937_64 rng(5);
  const DepthMap d({7, 5}, oracle::uniform(35, rng));
  for (int f : {2, 3, 4}) {
    const DepthMap up = bicubic_upsample(d, f);
    CHECK(oracle::max_abs_diff(oracle::bicubic(d, f), up.values()) < 1e-12);
    for (double v : up.values()) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
  }
}

}  // TEST_SUITE
