#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graspfn/pose_grid.hpp"
#include "json.hpp"

namespace graspfn {

/// Where a grasp function came from; persisted in the file header.
struct Provenance {
  std::string kind = "oracle";  // oracle | smoothed | predicted | transformed | constructed
  std::uint64_t seed = 0;
  nlohmann::json details = nlohmann::json::object();
};

/// One score in [0, 1] per discrete pose, in flat-index order.
struct GraspFunction {
  PoseGrid grid;
  std::vector<double> scores;
  Provenance provenance;

  GraspFunction() = default;
  explicit GraspFunction(const PoseGrid& g, double fill = 0.0) : grid(g), scores(g.size(), fill) {}

  double& at(int ku, int kv, int kt) { return scores[grid.flat({ku, kv, kt})]; }
  double at(int ku, int kv, int kt) const { return scores[grid.flat({ku, kv, kt})]; }

  /// Throws ContentError when the length or value range is wrong.
  void validate() const;
};

/// Score classes used for labels: 0, 0.2, ..., 1.0.
inline constexpr int kScoreClasses = 6;
inline double class_value(int k) { return static_cast<double>(k) / (kScoreClasses - 1); }
/// Nearest class for a score in [0, 1].
int score_class(double score);

nlohmann::json to_json_document(const GraspFunction& f);
GraspFunction grasp_function_from_json(const nlohmann::json& j);

void write_grasp_function(const std::filesystem::path& path, const GraspFunction& f);
GraspFunction read_grasp_function(const std::filesystem::path& path);

/// Writes one 8-bit PGM per theta slab (`<prefix>_t<k>.pgm`), each cell
/// drawn as a `scale` x `scale` block of value round(255 * score).
std::vector<std::filesystem::path> write_heatmaps(const std::filesystem::path& dir,
                                                  const std::string& prefix, const GraspFunction& f,
                                                  int scale = 8);

}  // namespace graspfn
