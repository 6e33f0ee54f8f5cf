#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "graspfn/depth_image.hpp"
#include "graspfn/grasp_function.hpp"
#include "graspfn/pose_grid.hpp"
#include "json.hpp"

namespace graspfn {

struct ConvStageSpec {
  int channels = 8;
  int kernel = 3;  // odd; zero "same" padding
  friend bool operator==(const ConvStageSpec&, const ConvStageSpec&) = default;
};

/// Network shape: input preprocessing, conv + ReLU + 2x2 max-pool stages,
/// fully-connected ReLU stages, then a linear head with six logits per pose.
struct PredictorArch {
  int image_width = 336;
  int image_height = 252;
  int downsample = 4;
  double depth_reference_mm = 600.0;  // maps to input 0
  double depth_scale_mm = 100.0;      // input = (reference - depth) / scale
  std::vector<ConvStageSpec> conv{{8, 5}, {16, 3}, {16, 3}};
  std::vector<int> hidden{128};
  PoseGrid grid;

  /// Three conv stages and two fully-connected stages on a 4x reduced image.
  static PredictorArch desk(const PoseGrid& grid);
  /// Five conv stages and two fully-connected stages at full resolution.
  static PredictorArch paper(const PoseGrid& grid);

  int input_width() const { return image_width / downsample; }
  int input_height() const { return image_height / downsample; }
  std::size_t outputs() const { return grid.size() * 6; }

  void validate() const;
  friend bool operator==(const PredictorArch&, const PredictorArch&) = default;
};

nlohmann::json arch_to_json(const PredictorArch& a);
PredictorArch arch_from_json(const nlohmann::json& j);

/// Architecture plus one flat parameter vector. Layers are stored in
/// declaration order, each as weights then biases; conv weights are
/// [out][in][ky][kx], dense weights [out][in].
struct PredictorModel {
  PredictorArch arch;
  std::vector<double> params;

  std::size_t parameter_count() const { return params.size(); }
  bool finite() const;
};

/// Number of parameters implied by an architecture.
std::size_t parameter_count(const PredictorArch& arch);

/// Fan-in scaled uniform initialisation, zero biases.
PredictorModel init_model(const PredictorArch& arch, std::uint64_t seed);
PredictorModel zero_model(const PredictorArch& arch);

/// Downsampled, normalised network input. Throws ConfigError when the image
/// size does not match the architecture.
std::vector<double> prepare_input(const PredictorArch& arch, const DepthImage& img);

/// Raw logits, |Q| groups of 6.
std::vector<double> forward(const PredictorModel& model, const DepthImage& img);
std::vector<double> forward_input(const PredictorModel& model, std::span<const double> input);

std::array<double, 6> softmax(std::span<const double, 6> v);

/// Mean per-pose cross-entropy, -1/M sum_j log softmax(y_j)[label_j].
double loss(std::span<const double> logits, std::span<const int> labels);

/// Scores -> class indices 0..5.
std::vector<int> labels_from_function(const GraspFunction& f);

struct LabeledInput {
  std::vector<double> input;
  std::vector<int> labels;
};

/// Batch loss (mean over examples and poses) and its gradient with respect
/// to every parameter. Optional per-class weights scale each pose's term.
double loss_and_gradient(const PredictorModel& model, std::span<const LabeledInput> batch, std::vector<double>& grad,
                         const std::array<double, 6>* class_weights = nullptr);
double batch_loss(const PredictorModel& model, std::span<const LabeledInput> batch,
                  const std::array<double, 6>* class_weights = nullptr);

/// Hash of every ReLU on/off state and max-pool winner. Finite differences
/// are only meaningful between parameter values with equal signatures.
std::uint64_t activation_signature(const PredictorModel& model, std::span<const double> input);

enum class Optimizer { Sgd, Momentum, Adam };
enum class Aggregation { Expected, MaxClass };

struct TrainingConfig {
  int batch_size = 8;
  double learning_rate = 0.05;
  long steps = 1000;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::Sgd;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int augmentations = 100;   // distinct augmented variants per example, first is the original
  int max_shift_cells = 3;
  bool class_weighting = false;
  double class_weight_cap = 10.0;
  int jobs = 1;              // 1 = strict single-threaded, bit-reproducible mode
};

struct TrainingExample {
  DepthImage image;  // noise model applied
  GraspFunction target;
};

struct TrainingResult {
  PredictorModel model;
  std::vector<double> loss_curve;  // batch loss per step
  double final_loss = 0.0;         // mean loss over every augmented example
};

/// Minibatch gradient descent on the cross-entropy loss over augmented
/// copies of the dataset. Throws TrainingError at the first non-finite
/// loss or weight.
TrainingResult train(PredictorModel model, std::span<const TrainingExample> data, const TrainingConfig& cfg);

/// Per-pose score from the six class probabilities: the expectation of the
/// class value, or the value of the most probable class.
GraspFunction predict_grasp_function(const PredictorModel& model, const DepthImage& img,
                                     Aggregation agg = Aggregation::Expected);
GraspFunction grasp_function_from_logits(const PoseGrid& grid, std::span<const double> logits,
                                         Aggregation agg = Aggregation::Expected);

/// Binary model file: "GFNMODEL", u32 version, u32 descriptor length, JSON
/// architecture descriptor, u64 parameter count, little-endian float64s.
void save_model(const std::filesystem::path& path, const PredictorModel& model);
PredictorModel load_model(const std::filesystem::path& path);
std::string encode_model(const PredictorModel& model);
PredictorModel decode_model(const std::string& bytes);

}  // namespace graspfn
