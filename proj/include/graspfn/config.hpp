#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graspfn/evaluate.hpp"
#include "graspfn/grasp_ops.hpp"
#include "graspfn/predictor.hpp"

namespace graspfn {

struct GenerateSettings {
  int count = 50;
  std::uint64_t first_object = 0;
  Placement placement = Placement::Centered;
};

struct PredictorSettings {
  PredictorArch arch;
  Aggregation aggregation = Aggregation::Expected;
  TrainingConfig training;
  bool inpaint = true;
  int max_objects = 0;  // 0 = every object in the dataset
};

struct EvalSettings {
  int objects = 100;
  std::uint64_t first_object = 1000;
  std::vector<double> sigma_uv_mm{5, 10, 15, 20};
  std::vector<double> sigma_theta_deg{10, 20, 30, 40};
  double slice_sigma_theta_deg = 10.0;
  int trials = 20;
  std::vector<Method> methods{Method::Centroid, Method::Best, Method::Robust};
  FunctionSource source = FunctionSource::Oracle;
  std::filesystem::path model_path;
  bool inpaint = true;
  Placement placement = Placement::Uniform;
  int refine = 10;
};

/// Everything one experiment needs; every command reads the same document.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  std::string grid_preset = "desk";
  PoseGrid grid = PoseGrid::desk();
  GripperSpec gripper;
  NoiseParams noise;
  SceneParams scene;
  ObjectGenParams objects;
  UncertaintyModel uncertainty = UncertaintyModel::from_degrees(10.0, 10.0);
  GenerateSettings generate;
  PredictorSettings predictor;
  EvalSettings eval;
  int jobs = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Defaults for the named grid preset (desk | paper).
RunConfig default_run_config(const std::string& grid_preset = "desk");

/// Switches grid and predictor architecture to a preset, keeping the
/// remaining settings.
void apply_grid_preset(RunConfig& cfg, const std::string& preset);

/// Strict parse: unknown fields, wrong types and syntax errors raise
/// ParseError with the field path and line; invalid values raise
/// ConfigError. Missing fields keep their defaults.
RunConfig parse_run_config(const std::string& text, const std::string& source_name = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json run_config_to_json(const RunConfig& cfg);

EvalConfig make_eval_config(const RunConfig& cfg);
SimulationParams make_simulation_params(const RunConfig& cfg, Placement placement);

}  // namespace graspfn
