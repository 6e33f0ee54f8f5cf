#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>
#include <string>

#include "graspfn/config.hpp"
#include "graspfn/depth_image.hpp"
#include "graspfn/error.hpp"
#include "graspfn/evaluate.hpp"
#include "graspfn/grasp_function.hpp"
#include "graspfn/grasp_ops.hpp"
#include "graspfn/grasp_oracle.hpp"
#include "graspfn/planner.hpp"
#include "graspfn/pose_grid.hpp"
#include "graspfn/predictor.hpp"
#include "graspfn/scene.hpp"
#include "json.hpp"

namespace py = pybind11;
using namespace graspfn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images cross the boundary as (height, width) float64 arrays in mm.
Array image_to_array(const DepthImage& img) {
  Array a({img.height, img.width});
  std::memcpy(a.mutable_data(), img.data.data(), img.data.size() * sizeof(double));
  return a;
}

DepthImage array_to_image(const Array& a, double px_per_mm) {
  if (a.ndim() != 2) throw RangeError("depth image must be a 2-d array");
  DepthImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), 0.0, px_per_mm);
  std::memcpy(img.data.data(), a.data(), img.data.size() * sizeof(double));
  return img;
}

// Scores are exposed as (ntheta, nv, nu), matching the flat layout.
Array scores_to_array(const GraspFunction& f) {
  Array a({f.grid.ntheta, f.grid.nv, f.grid.nu});
  std::memcpy(a.mutable_data(), f.scores.data(), f.scores.size() * sizeof(double));
  return a;
}

GraspFunction array_to_function(const PoseGrid& grid, const Array& a) {
  if (a.ndim() != 3 || a.shape(0) != grid.ntheta || a.shape(1) != grid.nv || a.shape(2) != grid.nu)
    throw RangeError("score array must have shape (ntheta, nv, nu)");
  GraspFunction f(grid);
  f.provenance.kind = "constructed";
  std::memcpy(f.scores.data(), a.data(), f.scores.size() * sizeof(double));
  return f;
}

py::tuple plan_tuple(const PlannedPose& p) {
  return py::make_tuple(p.pose.u(), p.pose.v(), p.pose.theta(), p.score);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grasp functions over a planar pose grid: oracle, smoothing, planning, learned predictor.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ContentError>(m, "ContentError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  py::class_<Pose>(m, "Pose")
      .def(py::init<double, double, double>(), py::arg("u"), py::arg("v"), py::arg("theta"))
      .def_property_readonly("u", &Pose::u)
      .def_property_readonly("v", &Pose::v)
      .def_property_readonly("theta", &Pose::theta)
      .def("__eq__", [](const Pose& a, const Pose& b) { return a == b; })
      .def("__repr__", [](const Pose& p) {
        return "Pose(" + std::to_string(p.u()) + ", " + std::to_string(p.v()) + ", " + std::to_string(p.theta()) +
               ")";
      });

  py::class_<PoseGrid>(m, "PoseGrid")
      .def(py::init<>())
      .def_static("desk", &PoseGrid::desk)
      .def_static("paper", &PoseGrid::paper)
      .def_static("centered", &PoseGrid::centered, py::arg("nu"), py::arg("nv"), py::arg("ntheta"),
                  py::arg("cell_uv_mm"), py::arg("px_per_mm"))
      .def_readwrite("nu", &PoseGrid::nu)
      .def_readwrite("nv", &PoseGrid::nv)
      .def_readwrite("ntheta", &PoseGrid::ntheta)
      .def_readwrite("cell_uv_mm", &PoseGrid::cell_uv_mm)
      .def_readwrite("origin", &PoseGrid::origin)
      .def_readwrite("px_per_mm", &PoseGrid::px_per_mm)
      .def_property_readonly("cell_theta", &PoseGrid::cell_theta)
      .def_property_readonly("image_width", &PoseGrid::image_width)
      .def_property_readonly("image_height", &PoseGrid::image_height)
      .def("size", &PoseGrid::size)
      .def("__len__", &PoseGrid::size)
      .def("validate", &PoseGrid::validate)
      .def("pose_to_index", [](const PoseGrid& g, const Pose& q) { return pose_to_index(g, q); })
      .def("index_to_pose", [](const PoseGrid& g, std::size_t i) { return index_to_pose(g, i); })
      .def("__eq__", [](const PoseGrid& a, const PoseGrid& b) { return a == b; });

  py::class_<Scene>(m, "Scene")
      .def_property_readonly("has_object", [](const Scene& s) { return s.object.has_value(); })
      .def_readwrite("plane_z_mm", &Scene::plane_z_mm)
      .def("to_json", [](const Scene& s) { return scene_to_json(s).dump(); })
      .def_static("from_json", [](const std::string& text) { return scene_from_json(nlohmann::json::parse(text)); })
      .def_static("load", [](const std::string& path) { return read_scene(path); })
      .def("save", [](const Scene& s, const std::string& path) { write_scene(path, s); });

  m.def(
      "random_scene",
      [](std::uint64_t object_seed, std::uint64_t placement_seed, const PoseGrid& grid, bool centered) {
        return place_object(generate_object(object_seed), placement_seed, grid, {},
                            centered ? Placement::Centered : Placement::Uniform);
      },
      py::arg("object_seed"), py::arg("placement_seed"), py::arg("grid"), py::arg("centered") = false,
      "Generate one random object and place it on the support plane.");
  m.def(
      "rectangle_scene",
      [](double length, double width, double height, double x, double y, double phi) {
        Scene s;
        SceneObject obj = make_rectangle(length, width, height);
        obj.pose_on_plane = {x, y, phi};
        s.object = obj;
        return s;
      },
      py::arg("length_mm"), py::arg("width_mm"), py::arg("height_mm"), py::arg("x_mm") = 0.0,
      py::arg("y_mm") = 0.0, py::arg("phi") = 0.0);
  m.def("empty_scene", [] { return Scene{}; });

  m.def(
      "render_depth", [](const Scene& s, const PoseGrid& g) { return image_to_array(render_depth(s, g)); },
      py::arg("scene"), py::arg("grid"));
  m.def(
      "apply_noise",
      [](const Array& img, double px_per_mm, std::uint64_t seed, double sigma_p_px, double sigma_d_mm) {
        NoiseParams p;
        p.sigma_p_px = sigma_p_px;
        p.sigma_d_mm = sigma_d_mm;
        return image_to_array(apply_noise(array_to_image(img, px_per_mm), p, seed));
      },
      py::arg("image"), py::arg("px_per_mm"), py::arg("seed"), py::arg("sigma_p_px") = 1.0,
      py::arg("sigma_d_mm") = 1.5);
  m.def(
      "inpaint_zeros",
      [](const Array& img, double px_per_mm) { return image_to_array(inpaint_zeros(array_to_image(img, px_per_mm))); },
      py::arg("image"), py::arg("px_per_mm"));

  py::class_<GripperSpec>(m, "GripperSpec")
      .def(py::init<>())
      .def_readwrite("finger_gap_mm", &GripperSpec::finger_gap_mm)
      .def_readwrite("finger_width_mm", &GripperSpec::finger_width_mm)
      .def_readwrite("finger_thickness_mm", &GripperSpec::finger_thickness_mm)
      .def_readwrite("tip_clearance_mm", &GripperSpec::tip_clearance_mm)
      .def_readwrite("lift_height_mm", &GripperSpec::lift_height_mm)
      .def_readwrite("friction_mu", &GripperSpec::friction_mu)
      .def_readwrite("contact_depth_mm", &GripperSpec::contact_depth_mm)
      .def("validate", &GripperSpec::validate);

  m.def(
      "attempt_grasp",
      [](const Scene& s, const GripperSpec& g, const Pose& q) { return attempt_grasp(s, g, q); },
      py::arg("scene"), py::arg("gripper"), py::arg("pose"));

  py::class_<GraspFunction>(m, "GraspFunction")
      .def(py::init([](const PoseGrid& g, const Array& a) { return array_to_function(g, a); }), py::arg("grid"),
           py::arg("scores"))
      .def_readonly("grid", &GraspFunction::grid)
      .def_property_readonly("scores", &scores_to_array)
      .def_property_readonly("kind", [](const GraspFunction& f) { return f.provenance.kind; })
      .def("to_json", [](const GraspFunction& f) { return to_json_document(f).dump(); })
      .def_static("from_json",
                  [](const std::string& text) { return grasp_function_from_json(nlohmann::json::parse(text)); })
      .def_static("load", [](const std::string& path) { return read_grasp_function(path); })
      .def("save", [](const GraspFunction& f, const std::string& path) { write_grasp_function(path, f); });

  m.def(
      "compute_grasp_function",
      [](const Scene& s, const GripperSpec& g, const PoseGrid& grid, std::uint64_t seed, int jobs) {
        py::gil_scoped_release release;
        return compute_grasp_function(s, g, grid, seed, jobs);
      },
      py::arg("scene"), py::arg("gripper"), py::arg("grid"), py::arg("seed"), py::arg("jobs") = 1);

  py::class_<UncertaintyModel>(m, "UncertaintyModel")
      .def_static("isotropic", &UncertaintyModel::isotropic, py::arg("sigma_uv_mm"), py::arg("sigma_theta_rad"))
      .def_static("from_degrees", &UncertaintyModel::from_degrees, py::arg("sigma_uv_mm"),
                  py::arg("sigma_theta_deg"))
      .def_readwrite("sigma_theta", &UncertaintyModel::sigma_theta)
      .def("validate", &UncertaintyModel::validate);

  m.def("smooth", &smooth, py::arg("f"), py::arg("uncertainty"));
  m.def("interpolate", &interpolate, py::arg("f"), py::arg("pose"));
  m.def(
      "argmax_continuous", [](const GraspFunction& f, int refine) { return plan_tuple(argmax_continuous(f, refine)); },
      py::arg("f"), py::arg("refine") = 10, "Returns (u, v, theta, score).");
  m.def(
      "best_grasp_plan", [](const GraspFunction& f, int refine) { return plan_tuple(best_grasp_plan(f, refine)); },
      py::arg("f"), py::arg("refine") = 10);
  m.def(
      "robust_best_grasp_plan",
      [](const GraspFunction& f, const UncertaintyModel& unc, int refine) {
        return plan_tuple(robust_best_grasp_plan(f, unc, refine));
      },
      py::arg("f"), py::arg("uncertainty"), py::arg("refine") = 10);
  m.def(
      "centroid_plan",
      [](const Array& img, const PoseGrid& grid, double plane_depth_mm) {
        return centroid_plan(array_to_image(img, grid.px_per_mm), grid, plane_depth_mm);
      },
      py::arg("image"), py::arg("grid"), py::arg("plane_depth_mm"));
  m.def("sample_achieved_pose", &sample_achieved_pose, py::arg("target"), py::arg("uncertainty"), py::arg("seed"));

  py::class_<PredictorModel, std::shared_ptr<PredictorModel>>(m, "PredictorModel")
      .def_property_readonly("parameter_count", &PredictorModel::parameter_count)
      .def_property_readonly("grid", [](const PredictorModel& p) { return p.arch.grid; })
      .def_static("load", [](const std::string& path) { return std::make_shared<PredictorModel>(load_model(path)); })
      .def("save", [](const PredictorModel& p, const std::string& path) { save_model(path, p); })
      .def(
          "predict",
          [](const PredictorModel& p, const Array& img, bool max_class) {
            return predict_grasp_function(p, array_to_image(img, p.arch.grid.px_per_mm),
                                          max_class ? Aggregation::MaxClass : Aggregation::Expected);
          },
          py::arg("image"), py::arg("max_class") = false);
  m.def(
      "init_model",
      [](const PoseGrid& grid, std::uint64_t seed) {
        return std::make_shared<PredictorModel>(init_model(PredictorArch::desk(grid), seed));
      },
      py::arg("grid"), py::arg("seed"), "Randomly initialised predictor with the default architecture.");

  m.def(
      "default_config", [](const std::string& preset) { return run_config_to_json(default_run_config(preset)).dump(2); },
      py::arg("preset") = "desk", "Default run configuration as JSON text.");
  m.def(
      "check_config",
      [](const std::string& text) { return run_config_to_json(parse_run_config(text)).dump(2); },
      py::arg("text"), "Parse and validate a run configuration; returns the normalised JSON.");
  m.def(
      "run_sweep",
      [](const std::string& config_text, int objects, int trials) {
        RunConfig cfg = parse_run_config(config_text);
        if (objects > 0) cfg.eval.objects = objects;
        if (trials > 0) cfg.eval.trials = trials;
        cfg.validate();
        const EvalConfig ec = make_eval_config(cfg);
        py::gil_scoped_release release;
        return results_csv(run_sweep(ec));
      },
      py::arg("config_text") = "{}", py::arg("objects") = 0, py::arg("trials") = 0,
      "Run the uncertainty sweep and return the results CSV.");
}
