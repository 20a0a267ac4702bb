#include <doctest.h>

#include <cmath>
#include <random>

#include "depthup/gradcheck.hpp"
#include "depthup/pipeline.hpp"
#include "depthup/solver.hpp"
#include "guided_window.hpp"
#include "oracle.hpp"

using namespace depthup;

namespace {

struct Instance {
  DepthMap depth, init;
  ColorImage guide;
  std::vector<double> lambda;
};

Instance random_instance(GridShape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Instance in{DepthMap(s, oracle::uniform(s.size(), rng)), DepthMap(s, oracle::uniform(s.size(), rng)),
              ColorImage(s, oracle::uniform(3 * s.size(), rng)),
              oracle::uniform(s.size(), rng, 1.0 / 255.0, 50.0 / 255.0)};
  return in;
}

BandwidthField field(GridShape s, const std::vector<double>& v) { return BandwidthField(ScalarGrid(s, v)); }

SolverConfig config_for(const oracle::Params& p) {
  SolverConfig cfg;
  cfg.alpha = p.alpha;
  cfg.beta = p.beta;
  cfg.sigma_s = p.sigma_s;
  cfg.sigma_c = p.sigma_c;
  cfg.patch_radius = p.radius;
  return cfg;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("factor schedule") {
  CHECK(default_alpha_for_factor(2) == 0.8);
  CHECK(default_alpha_for_factor(4) == 0.9);
  CHECK(default_alpha_for_factor(8) == 0.96);
  CHECK(default_alpha_for_factor(16) == 0.99);
  CHECK(default_max_iters_for_factor(2) == 5);
  CHECK(default_max_iters_for_factor(4) == 15);
  CHECK(default_max_iters_for_factor(8) == 50);
  CHECK(default_max_iters_for_factor(16) == 100);
  // Other factors take the nearest entry in log2; ties go to the smaller factor.
  CHECK(default_alpha_for_factor(1) == 0.8);
  CHECK(default_alpha_for_factor(3) == 0.9);
  CHECK(default_alpha_for_factor(5) == 0.9);
  CHECK(default_alpha_for_factor(6) == 0.96);
  CHECK(default_alpha_for_factor(11) == 0.96);
  CHECK(default_alpha_for_factor(12) == 0.99);
  CHECK(default_max_iters_for_factor(3) == 15);
  CHECK(default_alpha_for_factor(64) == 0.99);
  CHECK_THROWS_AS(default_alpha_for_factor(0), ConfigError);
}

TEST_CASE("config defaults and validation") {
  const SolverConfig d;
  CHECK(d.beta == 0.3);
  CHECK(d.patch_radius == 9);
  CHECK(d.sigma_s == 9.0);
  CHECK(d.sigma_c == 10.0 / 255.0);
  CHECK(d.lambda_init == 7.0 / 255.0);
  CHECK(d.tau == 0.3);
  CHECK_FALSE(d.alpha.has_value());
  CHECK_NOTHROW(d.validate());
  const SolverConfig r = d.resolved_for_factor(4);
  CHECK(r.alpha_value() == 0.9);
  CHECK(*r.max_iters == 15);
  CHECK_THROWS_AS(d.alpha_value(), ConfigError);

  SolverConfig bad;
  bad.alpha = 1.5;
  CHECK_THROWS_WITH_AS(bad.validate(), "alpha must be in (0,1)", ConfigError);
  bad = SolverConfig{};
  bad.beta = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SolverConfig{};
  bad.tau = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SolverConfig{};
  bad.lambda_init = bad.lambda_max * 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SolverConfig{};
  bad.lambda_min = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("upsampling factor must be an integer") {
  CHECK(upsampling_factor({16, 16}, {64, 64}) == 4);
  CHECK_THROWS_WITH_AS(upsampling_factor({16, 16}, {56, 56}), doctest::Contains("non-integer upsampling factor"),
                       ConfigError);
  CHECK_THROWS_AS(upsampling_factor({16, 16}, {64, 32}), ConfigError);
}

TEST_CASE("objective vanishes for equal constant maps") {
  const GridShape s{5, 6};
  SolverConfig cfg;
  cfg.alpha = 0.9;
  std::mt19937_64 rng(1);
  const ColorImage img(s, oracle::uniform(3 * s.size(), rng));
  const DepthMap c(s, 0.37);
  CHECK(objective(c, c, img, BandwidthField(s, 7.0 / 255.0), cfg) == 0.0);
}

TEST_CASE("objective of a single pixel with D = D0 is zero") {
  SolverConfig cfg;
  cfg.alpha = 0.8;
  cfg.beta = 0.0;
  const DepthMap d({1, 1}, 0.6);
  const ColorImage img({1, 1}, ColorImage::Rgb{0.1, 0.5, 0.9});
  CHECK(objective(d, d, img, BandwidthField({1, 1}, 0.05), cfg) == 0.0);
  const DepthMap other({1, 1}, 0.4);
  const double expected = 0.2 * oracle::phi(0.04, 0.05);
  CHECK(objective(other, d, img, BandwidthField({1, 1}, 0.05), cfg) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("objective matches the double-loop oracle") {
  oracle::Params p;
  const SolverConfig cfg = config_for(p);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Instance in = random_instance({3, 3}, seed);
    const std::vector<double> lam(9, 7.0 / 255.0);
    const double lib = objective(in.init, in.init, in.guide, field({3, 3}, lam), cfg);
    CHECK(std::abs(lib - oracle::objective(in.init, in.init, in.guide, lam, p)) < 1e-12);
    // General case: distinct D, D0 and a varying bandwidth.
    const double lib2 = objective(in.depth, in.init, in.guide, field({3, 3}, in.lambda), cfg);
    CHECK(std::abs(lib2 - oracle::objective(in.depth, in.init, in.guide, in.lambda, p)) < 1e-12);
  }
  CHECK_THROWS_AS(objective(DepthMap({2, 2}, 0.1), DepthMap({2, 3}, 0.1), ColorImage({2, 2}, ColorImage::Rgb{}),
                            BandwidthField({2, 2}, 0.1), cfg),
                  DimensionError);
}

TEST_CASE("update_depth keeps constant maps fixed") {
  const GridShape s{6, 6};
  SolverConfig cfg;
  cfg.alpha = 0.9;
  std::mt19937_64 rng(4);
  const ColorImage img(s, oracle::uniform(3 * s.size(), rng));
  const DepthMap c(s, 0.25);
  const SolverState st{c, c, BandwidthField(s, 7.0 / 255.0), 0, {}};
  const DepthMap same = update_depth(st, img, cfg);
  for (double v : same.values()) CHECK(std::abs(v - 0.25) < 1e-15);

  // With alpha close to 0 the data term dominates and D = D0 is returned.
  cfg.alpha = 1e-12;
  const DepthMap data_only = update_depth(st, img, cfg);
  for (double v : data_only.values()) CHECK(std::abs(v - 0.25) < 1e-15);
}

TEST_CASE("update_depth matches the double-loop oracle") {
  oracle::Params p;
  for (GridShape s : {GridShape{4, 4}, GridShape{16, 16}, GridShape{5, 11}}) {
    for (std::uint64_t seed : {10u, 11u}) {
      const Instance in = random_instance(s, seed);
      const SolverState st{in.depth, in.init, field(s, in.lambda), 0, {}};
      const DepthMap lib = update_depth(st, in.guide, config_for(p));
      CHECK(oracle::max_abs_diff(oracle::update_depth(in.depth, in.init, in.guide, in.lambda, p), lib.values()) < 1e-12);
    }
  }
  p.radius = 2;
  p.sigma_s = 1.5;
  p.sigma_c = 0.2;
  p.alpha = 0.6;
  const Instance in = random_instance({9, 7}, 12);
  const SolverState st{in.depth, in.init, field({9, 7}, in.lambda), 0, {}};
  const DepthMap lib = update_depth(st, in.guide, config_for(p));
  CHECK(oracle::max_abs_diff(oracle::update_depth(in.depth, in.init, in.guide, in.lambda, p), lib.values()) < 1e-12);
}

TEST_CASE("update_depth output stays within the input range") {
  oracle::Params p;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance in = random_instance({8, 8}, 100 + seed);
    const SolverState st{in.depth, in.init, field({8, 8}, in.lambda), 0, {}};
    const DepthMap out = update_depth(st, in.guide, config_for(p));
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < in.depth.size(); ++i) {
      lo = std::min({lo, in.depth[i], in.init[i]});
      hi = std::max({hi, in.depth[i], in.init[i]});
    }
    for (double v : out.values()) {
      CHECK(v >= lo);
      CHECK(v <= hi);
    }
  }
}

TEST_CASE("cached and on-demand color weights agree exactly") {
  std::mt19937_64 rng(8);
  const GridShape s{9, 13};
  const ColorImage img(s, oracle::uniform(3 * s.size(), rng));
  const detail::GuidedWindow cached(img, 3, 2.0, 0.1, true);
  const detail::GuidedWindow lazy(img, 3, 2.0, 0.1, false);
  std::vector<double> scratch_a(cached.window_size()), scratch_b(lazy.window_size());
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c) {
      const auto a = cached.colors(r, c, scratch_a);
      const auto b = lazy.colors(r, c, scratch_b);
      for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a[k] == b[k]);
    }
}

TEST_CASE("discrete_laplacian examples") {
  CHECK(discrete_laplacian(BandwidthField({4, 5}, 0.1)) == ScalarGrid({4, 5}, 0.0));
  ScalarGrid ramp({3, 6});
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c) ramp(r, c) = static_cast<double>((c + 1) * (c + 1));
  const ScalarGrid lap = discrete_laplacian(BandwidthField(ramp));
  for (int c = 1; c < 5; ++c) CHECK(lap(1, c) == 2.0);
  CHECK(discrete_laplacian(BandwidthField({1, 1}, 0.3))(0, 0) == 0.0);
}

TEST_CASE("bandwidth gradient vanishes at a constant solution") {
  const GridShape s{6, 6};
  SolverConfig cfg;
  cfg.alpha = 0.9;
  std::mt19937_64 rng(9);
  const ColorImage img(s, oracle::uniform(3 * s.size(), rng));
  const DepthMap c(s, 0.5);
  const SolverState st{c, c, BandwidthField(s, 7.0 / 255.0), 0, {}};
  CHECK(bandwidth_gradient(st, img, cfg) == ScalarGrid(s, 0.0));
}

TEST_CASE("bandwidth gradient of the regularizer alone") {
  const GridShape s{5, 7};
  SolverConfig cfg;
  cfg.alpha = 0.9;
  ScalarGrid ramp(s);
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c) ramp(r, c) = 1e-3 * (c + 1) * (c + 1);
  const DepthMap d(s, 0.5);
  const SolverState st{d, d, BandwidthField(ramp), 0, {}};
  const ColorImage img(s, ColorImage::Rgb{0.2, 0.2, 0.2});
  const ScalarGrid g = bandwidth_gradient(st, img, cfg);
  // Laplacian of 1e-3 * x^2 is 2e-3, so the gradient is -2 beta * 2e-3.
  for (int r = 0; r < s.height; ++r)
    for (int c = 1; c < s.width - 1; ++c) CHECK(g(r, c) == doctest::Approx(-4.0 * cfg.beta * 1e-3).epsilon(1e-12));
  const ScalarGrid flipped = bandwidth_gradient(st, img, cfg, RegularizerSign::flipped);
  CHECK(flipped(2, 3) == doctest::Approx(4.0 * cfg.beta * 1e-3).epsilon(1e-12));
}

TEST_CASE("bandwidth gradient matches the term-by-term oracle") {
  oracle::Params p;
  const Instance in = random_instance({6, 7}, 31);
  const SolverState st{in.depth, in.init, field({6, 7}, in.lambda), 0, {}};
  const ScalarGrid g = bandwidth_gradient(st, in.guide, config_for(p));
  const auto expected = oracle::bandwidth_gradient(in.depth, in.init, in.guide, in.lambda, p);
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(g[i] == doctest::Approx(expected[i]).epsilon(1e-11).scale(1e-12));
}

TEST_CASE("bandwidth gradient matches finite differences of the objective") {
  SolverConfig cfg;
  cfg.alpha = 0.9;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RandomProblem prob = random_problem({8, 8}, seed, cfg);
    CHECK(check_bandwidth_gradient(prob, cfg).max_rel_error < 1e-4);
    CHECK(check_bandwidth_gradient(prob, cfg, RegularizerSign::flipped).max_rel_error > 1e-1);
  }
  CHECK(check_bandwidth_gradient(random_problem({1, 1}, 3, cfg), cfg).max_rel_error < 1e-4);
}

TEST_CASE("update_bandwidth steps and clamps") {
  const GridShape s{2, 2};
  SolverConfig cfg;
  const DepthMap d(s, 0.5);
  const SolverState st{d, d, BandwidthField(s, 7.0 / 255.0), 0, {}};
  CHECK(update_bandwidth(st, ScalarGrid(s, 0.0), cfg) == st.bandwidth);
  const BandwidthField stepped = update_bandwidth(st, ScalarGrid(s, 0.01), cfg);
  CHECK(stepped(0, 0) == doctest::Approx(0.024451).epsilon(1e-5));
  CHECK(stepped(1, 1) == doctest::Approx(7.0 / 255.0 - 0.003).epsilon(1e-15));
  CHECK(update_bandwidth(st, ScalarGrid(s, 1e3), cfg)(0, 1) == cfg.lambda_min);
  CHECK(update_bandwidth(st, ScalarGrid(s, -1e3), cfg)(1, 0) == cfg.lambda_max);
}

TEST_CASE("upsample of a constant map converges at once") {
  std::mt19937_64 rng(15);
  const ColorImage img({32, 32}, oracle::uniform(3 * 32 * 32, rng));
  const DepthMap low({8, 8}, 0.45);
  const UpsampleResult res = upsample(low, img, SolverConfig{});
  CHECK(res.report.converged);
  CHECK(res.report.iterations_run == 1);
  CHECK(res.report.objective_trace.size() == 2);
  CHECK(res.report.alpha == 0.9);
  for (double v : res.depth.values()) CHECK(std::abs(v - 0.45) < 1e-13);
}

TEST_CASE("upsample rejects non-integer ratios") {
  const ColorImage img({28, 28}, ColorImage::Rgb{0.5, 0.5, 0.5});
  CHECK_THROWS_WITH_AS(upsample(DepthMap({8, 8}, 0.4), img, SolverConfig{}),
                       doctest::Contains("non-integer upsampling factor"), ConfigError);
  CHECK_THROWS_AS(mrf_upsample(DepthMap({8, 8}, 0.4), img, SolverConfig{}), ConfigError);
}

TEST_CASE("factor-1 refinement stays closer to clean input than a perturbed start") {
  const Scene scene = make_synthetic_scene({.height = 24, .width = 24});
  const UpsampleResult res = upsample(scene.depth, scene.color, SolverConfig{});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0 / 255.0);
  std::vector<double> perturbed(scene.depth.values().begin(), scene.depth.values().end());
  for (double& v : perturbed) v = std::clamp(v + n(rng), 0.0, 1.0);
  CHECK(rmse(res.depth, scene.depth) < rmse(DepthMap(scene.depth.shape(), perturbed), scene.depth));
}

TEST_CASE("objective trace starts at the initial guess and ends at the result") {
  const Scene scene = make_synthetic_scene({.height = 32, .width = 32});
  const DepthMap low = degrade(scene.depth, {4, 5.0 / 255.0, 17});
  const SolverConfig cfg = SolverConfig{}.resolved_for_factor(4);
  const UpsampleResult res = upsample(low, scene.color, cfg);
  const auto& trace = res.report.objective_trace;
  REQUIRE(trace.size() == static_cast<std::size_t>(res.report.iterations_run) + 1);
  const DepthMap d0 = bicubic_upsample(low, 4);
  const BandwidthField initial(d0.shape(), cfg.lambda_init);
  CHECK(trace.front() == doctest::Approx(objective(d0, d0, scene.color, initial, cfg)).epsilon(1e-12));
  CHECK(trace.back() == doctest::Approx(objective(res.depth, d0, scene.color, res.bandwidth, cfg)).epsilon(1e-12));
  CHECK(res.report.final_objective == trace.back());
  CHECK(trace.back() < trace.front());
  for (double l : res.bandwidth.values()) {
    CHECK(l >= cfg.lambda_min);
    CHECK(l <= cfg.lambda_max);
  }
}

TEST_CASE("objective decreases on noisy synthetic instances") {
  const SolverConfig base;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (double sigma : {2.0 / 255.0, 5.0 / 255.0}) {
      SceneSpec spec{.height = 32, .width = 32, .texture = seed % 2 ? Texture::checker : Texture::stripes, .seed = seed};
      const Scene scene = make_synthetic_scene(spec);
      const DepthMap low = degrade(scene.depth, {4, sigma, seed});
      const SolverConfig cfg = base.resolved_for_factor(4);
      const UpsampleResult res = upsample(low, scene.color, cfg);
      const DepthMap d0 = bicubic_upsample(low, 4);
      CHECK(objective(res.depth, d0, scene.color, res.bandwidth, cfg) <
            objective(d0, d0, scene.color, res.bandwidth, cfg));
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  const Scene scene = make_synthetic_scene({.height = 48, .width = 40, .texture = Texture::checker});
  const DepthMap low = degrade(scene.depth, {4, 5.0 / 255.0, 1});
  SolverConfig cfg;
  cfg.threads = 1;
  const UpsampleResult one = upsample(low, scene.color, cfg);
  const MrfResult mrf_one = mrf_upsample(low, scene.color, cfg);
  for (int t : {2, 4, 8}) {
    cfg.threads = t;
    const UpsampleResult many = upsample(low, scene.color, cfg);
    CHECK(many.depth == one.depth);
    CHECK(many.bandwidth == one.bandwidth);
    CHECK(many.report.objective_trace == one.report.objective_trace);
    CHECK(mrf_upsample(low, scene.color, cfg).depth == mrf_one.depth);
  }
}

TEST_CASE("converged fixed-bandwidth runs are stationary in the interior") {
  const Scene scene = make_synthetic_scene({.height = 24, .width = 24, .texture = Texture::stripes});
  const DepthMap low = degrade(scene.depth, {2, 5.0 / 255.0, 5});
  SolverConfig cfg = SolverConfig{}.resolved_for_factor(2);
  cfg.adaptive_bandwidth = false;
  cfg.max_iters = 2000;
  const UpsampleResult res = upsample(low, scene.color, cfg);
  REQUIRE(res.report.converged);
  const DepthMap d0 = bicubic_upsample(low, 2);
  const BandwidthField bw(d0.shape(), cfg.lambda_init);
  const double h = 1e-6;
  // Windows of these pixels stay inside the image, where the weights are symmetric.
  for (int r = cfg.patch_radius; r < 24 - cfg.patch_radius; r += 2)
    for (int c = cfg.patch_radius; c < 24 - cfg.patch_radius; c += 2) {
      const std::size_t i = res.depth.grid().index(r, c);
      const double up = objective(res.depth.with_value(i, res.depth[i] + h), d0, scene.color, bw, cfg);
      const double down = objective(res.depth.with_value(i, res.depth[i] - h), d0, scene.color, bw, cfg);
      CHECK(std::abs((up - down) / (2 * h)) < 1e-3);
    }
}

TEST_CASE("mrf keeps constant depth constant, even under texture") {
  const Scene scene = make_synthetic_scene({.height = 32, .width = 32, .depth_step = 0.0, .texture = Texture::checker});
  const MrfResult res = mrf_upsample(DepthMap({8, 8}, 0.4), scene.color, SolverConfig{});
  for (double v : res.depth.values()) CHECK(std::abs(v - 0.4) < 1e-13);
  CHECK(res.report.converged);
}

TEST_CASE("mrf step matches the double-loop oracle") {
  oracle::Params p;
  for (GridShape s : {GridShape{4, 4}, GridShape{16, 16}}) {
    const Instance in = random_instance(s, 40 + static_cast<std::uint64_t>(s.height));
    const DepthMap lib = mrf_update(in.depth, in.init, in.guide, config_for(p));
    CHECK(oracle::max_abs_diff(oracle::mrf_step(in.depth, in.init, in.guide, p), lib.values()) < 1e-12);
  }
}

TEST_CASE("mrf objective is the quadratic energy") {
  oracle::Params p;
  p.radius = 1;
  const Instance in = random_instance({3, 4}, 77);
  double expected = 0.0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) {
      expected += (1 - p.alpha) * std::pow(in.depth(r, c) - in.init(r, c), 2);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int rj = oracle::clampi(r + dy, 2), cj = oracle::clampi(c + dx, 3);
          expected += p.alpha * oracle::color(in.guide, r, c, rj, cj, p.sigma_c) * std::pow(in.depth(r, c) - in.depth(rj, cj), 2);
        }
    }
  CHECK(mrf_objective(in.depth, in.init, in.guide, config_for(p)) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("robust update reduces to the mrf update with flat windows and wide bandwidth") {
  // With d = s = 1 and omega = 1/M the robust step is the mrf step for an alpha
  // satisfying alpha_m / (1 - alpha_m) = alpha / (M (1 - alpha)).
  const GridShape s{12, 12};
  std::mt19937_64 rng(123);
  const ColorImage img(s, oracle::uniform(3 * s.size(), rng));
  const DepthMap d0(s, 0.5);
  std::vector<double> dn = oracle::uniform(s.size(), rng, 0.5 - 1e-3, 0.5 + 1e-3);
  SolverConfig robust;
  robust.alpha = 0.9;
  robust.sigma_s = 1e6;
  robust.sigma_c = 0.2;
  const double m = 361.0;
  const double ratio = robust.alpha_value() / (m * (1.0 - robust.alpha_value()));
  SolverConfig mrf = robust;
  mrf.alpha = ratio / (1.0 + ratio);
  const SolverState st{DepthMap(s, dn), d0, BandwidthField(s, robust.lambda_max), 0, {}};
  const DepthMap a = update_depth(st, img, robust);
  const DepthMap b = mrf_update(st.depth_current, d0, img, mrf);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
}

}  // TEST_SUITE
