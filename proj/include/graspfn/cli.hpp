#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "graspfn/config.hpp"

namespace graspfn {

/// Process exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitUsage = 2,  // bad flags or malformed config / data documents
  kExitIo = 3,
  kExitTraining = 4,
  kExitContent = 5,
  kExitConfig = 6,  // well-formed but invalid or out-of-range values
};

/// Maps the active exception to an exit status; call from a catch block.
int exit_code_for_current_exception();

struct GenerateReport {
  int generated = 0;
  int skipped = 0;  // already complete on disk
};

/// Writes obj_NNNNN/{scene.json, depth_clean.pgm, depth_noisy.pgm,
/// grasp.json} for `count` objects. Objects whose four files all exist are
/// left alone; files are written to a temporary name and renamed, with
/// grasp.json last.
GenerateReport cmd_generate(const RunConfig& cfg, int count, const std::filesystem::path& out_dir, std::ostream& log);

struct TrainReport {
  int objects = 0;
  double final_loss = 0.0;
  std::filesystem::path model_path;
  std::filesystem::path loss_csv_path;
};

/// Loss CSV path written next to a model file.
std::filesystem::path loss_csv_path_for(const std::filesystem::path& model_path);

/// Trains on every obj_* directory under `dataset_dir` (sorted by name).
TrainReport cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                      const std::filesystem::path& model_out, std::ostream& log);

struct PlanRequest {
  Method method = Method::Robust;
  std::optional<std::filesystem::path> function;  // precomputed grasp function
  std::optional<std::filesystem::path> model;     // predictor; otherwise the oracle
  std::optional<std::filesystem::path> scene;
  std::optional<std::filesystem::path> image;     // 16-bit depth PGM
  UncertaintyModel uncertainty;
  std::optional<std::filesystem::path> heatmaps;  // directory for per-slab PGMs
};

/// Plans one grasp and writes {method, pose {u_mm, v_mm, theta_rad},
/// score} to `out`. Returns the same document.
nlohmann::json cmd_plan(const RunConfig& cfg, const PlanRequest& req, const std::filesystem::path& out);

/// Runs the sweep, writes the results CSV and a sigma_uv slice CSV
/// (`<stem>_uv_slice.csv`), and prints the summary table.
EvalResult cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& out_csv, std::ostream& summary);

/// Renders a scene file to a 16-bit PGM, optionally with sensor noise.
void cmd_render(const RunConfig& cfg, const std::filesystem::path& scene_path, const std::filesystem::path& out_pgm,
                bool noisy);

}  // namespace graspfn
