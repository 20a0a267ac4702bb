#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "depthup/error.hpp"
#include "depthup/gradcheck.hpp"
#include "depthup/pipeline.hpp"
#include "depthup/solver.hpp"

namespace py = pybind11;
using namespace depthup;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DepthMap to_depth(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("depth must be a 2-D array");
  const GridShape shape{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1))};
  return DepthMap(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

ColorImage to_color(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionError("guide must be an H x W x 3 array");
  const GridShape shape{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1))};
  return ColorImage(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(std::span<const double> values, GridShape shape) {
  Array out({shape.height, shape.width});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

Array to_array(const ColorImage& img) {
  Array out({img.height(), img.width(), 3});
  std::copy(img.values().begin(), img.values().end(), out.mutable_data());
  return out;
}

py::dict report_dict(const UpsampleReport& r) {
  py::dict d;
  d["iterations"] = r.iterations_run;
  d["converged"] = r.converged;
  d["final_objective"] = r.final_objective;
  d["objective_trace"] = r.objective_trace;
  d["alpha"] = r.alpha;
  d["max_iters"] = r.max_iters;
  d["wall_time"] = r.wall_time;
  return d;
}

SolverConfig config_or_default(const std::optional<SolverConfig>& cfg) { return cfg.value_or(SolverConfig{}); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Guided depth upsampling with a robust, adaptive-bandwidth energy";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<InputRangeError>(m, "InputRangeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &SolverConfig::alpha)
      .def_readwrite("beta", &SolverConfig::beta)
      .def_readwrite("sigma_s", &SolverConfig::sigma_s)
      .def_readwrite("sigma_c", &SolverConfig::sigma_c)
      .def_readwrite("patch_radius", &SolverConfig::patch_radius)
      .def_readwrite("lambda_init", &SolverConfig::lambda_init)
      .def_readwrite("tau", &SolverConfig::tau)
      .def_readwrite("lambda_min", &SolverConfig::lambda_min)
      .def_readwrite("lambda_max", &SolverConfig::lambda_max)
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("tol", &SolverConfig::tol)
      .def_readwrite("adaptive_bandwidth", &SolverConfig::adaptive_bandwidth)
      .def_readwrite("threads", &SolverConfig::threads)
      .def("validate", &SolverConfig::validate)
      .def("resolved_for_factor", &SolverConfig::resolved_for_factor, py::arg("factor"));

  m.def("default_alpha_for_factor", &default_alpha_for_factor, py::arg("factor"));
  m.def("default_max_iters_for_factor", &default_max_iters_for_factor, py::arg("factor"));

  m.def(
      "upsample",
      [](const Array& low, const Array& guide, const std::optional<SolverConfig>& cfg) {
        const DepthMap d = to_depth(low);
        const ColorImage g = to_color(guide);
        UpsampleResult res;
        {
          py::gil_scoped_release release;
          res = upsample(d, g, config_or_default(cfg));
        }
        py::dict out = report_dict(res.report);
        out["depth"] = to_array(res.depth.values(), res.depth.shape());
        out["bandwidth"] = to_array(res.bandwidth.values(), res.bandwidth.shape());
        return out;
      },
      py::arg("low"), py::arg("guide"), py::arg("config") = py::none(),
      "Upsample a low-resolution depth map (values in [0,1]) to the guide resolution.");

  m.def(
      "mrf_upsample",
      [](const Array& low, const Array& guide, const std::optional<SolverConfig>& cfg) {
        const DepthMap d = to_depth(low);
        const ColorImage g = to_color(guide);
        MrfResult res;
        {
          py::gil_scoped_release release;
          res = mrf_upsample(d, g, config_or_default(cfg));
        }
        py::dict out = report_dict(res.report);
        out["depth"] = to_array(res.depth.values(), res.depth.shape());
        return out;
      },
      py::arg("low"), py::arg("guide"), py::arg("config") = py::none(), "Quadratic MRF baseline.");

  m.def(
      "bicubic_upsample",
      [](const Array& src, int factor) {
        const DepthMap out = bicubic_upsample(to_depth(src), factor);
        return to_array(out.values(), out.shape());
      },
      py::arg("src"), py::arg("factor"));

  m.def(
      "degrade",
      [](const Array& depth, int factor, double noise_sigma, std::uint64_t seed) {
        const DepthMap out = degrade(to_depth(depth), {factor, noise_sigma, seed});
        return to_array(out.values(), out.shape());
      },
      py::arg("depth"), py::arg("factor") = 4, py::arg("noise_sigma") = 0.0, py::arg("seed") = 0);

  m.def(
      "rmse",
      [](const Array& a, const Array& b, std::optional<double> max_mm) {
        return rmse(to_depth(a), to_depth(b), max_mm ? RmseScale::millimeters(*max_mm) : RmseScale::unit255());
      },
      py::arg("a"), py::arg("b"), py::arg("max_mm") = py::none(),
      "RMSE on the 0-255 scale, or in millimeters when max_mm is given.");

  m.def(
      "objective",
      [](const Array& depth, const Array& depth_init, const Array& guide, const Array& bandwidth,
         const SolverConfig& cfg) {
        if (bandwidth.ndim() != 2) throw DimensionError("bandwidth must be a 2-D array");
        const GridShape shape{static_cast<int>(bandwidth.shape(0)), static_cast<int>(bandwidth.shape(1))};
        const BandwidthField bw(ScalarGrid(shape, std::vector<double>(bandwidth.data(), bandwidth.data() + bandwidth.size())));
        return objective(to_depth(depth), to_depth(depth_init), to_color(guide), bw, cfg);
      },
      py::arg("depth"), py::arg("depth_init"), py::arg("guide"), py::arg("bandwidth"), py::arg("config"));

  m.def(
      "synthetic_scene",
      [](int height, int width, double depth_step, int edge_offset_px, const std::string& texture, bool color_edge,
         std::uint64_t seed) {
        SceneSpec spec{.height = height,
                       .width = width,
                       .depth_step = depth_step,
                       .edge_offset_px = edge_offset_px,
                       .texture = parse_texture(texture),
                       .color_edge = color_edge,
                       .seed = seed};
        const Scene s = make_synthetic_scene(spec);
        return py::make_tuple(to_array(s.depth.values(), s.depth.shape()), to_array(s.color));
      },
      py::arg("height") = 128, py::arg("width") = 128, py::arg("depth_step") = 50.0 / 255.0,
      py::arg("edge_offset_px") = 0, py::arg("texture") = "none", py::arg("color_edge") = true, py::arg("seed") = 0,
      "Two-region step scene; returns (depth, color).");

  m.def(
      "gradient_check",
      [](int size, std::uint64_t seed, bool flip_regularizer) {
        SolverConfig cfg;
        cfg.alpha = default_alpha_for_factor(4);
        const RandomProblem p = random_problem({size, size}, seed, cfg);
        return check_bandwidth_gradient(p, cfg, flip_regularizer ? RegularizerSign::flipped
                                                                 : RegularizerSign::true_gradient)
            .max_rel_error;
      },
      py::arg("size") = 8, py::arg("seed") = 1, py::arg("flip_regularizer") = false,
      "Max relative error between the analytic bandwidth gradient and central differences.");
}
