#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "graspfn/depth_image.hpp"
#include "graspfn/grasp_oracle.hpp"
#include "graspfn/planner.hpp"
#include "graspfn/predictor.hpp"
#include "graspfn/scene.hpp"

namespace graspfn {

/// One synthetic object, placed and imaged. Every random stream derives
/// from (master seed, object seed).
struct SimulatedObject {
  std::uint64_t object_seed = 0;
  Scene scene;
  DepthImage clean;
  DepthImage noisy;
};

struct SimulationParams {
  PoseGrid grid;
  SceneParams scene;
  ObjectGenParams objects;
  NoiseParams noise;
  Placement placement = Placement::Uniform;
};

SimulatedObject simulate_object(std::uint64_t master_seed, std::uint64_t object_seed, const SimulationParams& p);

/// Seed of the oracle's jitter stream for an object.
std::uint64_t oracle_seed(std::uint64_t master_seed, std::uint64_t object_seed);

enum class FunctionSource { Oracle, Predictor };

struct EvalConfig {
  std::vector<std::uint64_t> object_seeds;
  std::vector<double> sigma_uv_mm{5, 10, 15, 20};
  std::vector<double> sigma_theta_deg{10, 20, 30, 40};
  int trials = 20;
  std::vector<Method> methods{Method::Centroid, Method::Best, Method::Robust};
  FunctionSource source = FunctionSource::Oracle;
  std::shared_ptr<const PredictorModel> model;  // required for the predictor source
  Aggregation aggregation = Aggregation::Expected;
  std::uint64_t master_seed = 1;
  SimulationParams sim;
  GripperSpec gripper;
  bool inpaint = true;
  int refine = 10;
  double foreground_margin_mm = kForegroundMarginMm;
  int jobs = 1;

  void validate() const;
};

struct EvalCell {
  Method method = Method::Best;
  double sigma_uv_mm = 0.0;
  double sigma_theta_deg = 0.0;
  long trials = 0;
  long successes = 0;

  double rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

struct EvalResult {
  std::uint64_t seed = 0;
  /// Method-major, then sigma_theta, then sigma_uv, in configuration order.
  std::vector<EvalCell> cells;
  long objects_evaluated = 0;
  long objects_skipped = 0;
  std::vector<std::string> skip_reasons;

  const EvalCell& at(Method m, double sigma_uv_mm, double sigma_theta_deg) const;
};

/// Runs every method on every object under every uncertainty setting. All
/// methods share the same execution noise draw per (object, setting, trial).
/// Objects whose pipeline throws a library error are skipped and counted.
EvalResult run_sweep(const EvalConfig& cfg);

/// method,sigma_uv_mm,sigma_theta_deg,trials,successes,rate
std::string results_csv(const EvalResult& r);
/// Success rate per method against sigma_uv at one sigma_theta:
/// sigma_uv_mm,<method>... columns.
std::string uv_slice_csv(const EvalResult& r, double sigma_theta_deg);
/// Rows per method and sigma_uv, columns per sigma_theta, rates in percent.
std::string summary_table(const EvalResult& r);

}  // namespace graspfn
