#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "graspfn/geometry.hpp"
#include "graspfn/grasp_function.hpp"
#include "graspfn/pose_grid.hpp"
#include "graspfn/scene.hpp"

namespace graspfn {

/// Parallel-jaw gripper geometry. The fingers sit at +-finger_gap/2 along
/// the closing axis, each a finger_thickness x finger_width rectangle.
struct GripperSpec {
  double finger_gap_mm = 100.0;
  double finger_width_mm = 20.0;
  double finger_thickness_mm = 10.0;
  double tip_clearance_mm = 1.0;
  double lift_height_mm = 200.0;
  double friction_mu = 0.6;
  /// Depth of the band behind the extreme contact point that counts as the
  /// finger's contact patch.
  double contact_depth_mm = 2.0;

  void validate() const;
};

/// Outcome of each quasi-static check for one attempt.
struct GraspDiagnostics {
  bool collision = false;       // a finger overlaps the object at the open position
  bool contact = false;         // material between the jaws, width in (0, gap)
  bool force_closure = false;   // both patch normals inside the friction cone
  bool stable = false;          // COM between the contact patches along the jaw line
  double width_mm = 0.0;        // object extent along the closing axis inside the jaws
  double normal_angle_pos = 0.0;  // radians between +s patch normal and the closing axis
  double normal_angle_neg = 0.0;
  double com_offset_mm = 0.0;   // COM position along the jaw line, gripper frame
  double contact_t_min = 0.0;   // jaw-line extent of the contact edges
  double contact_t_max = 0.0;

  bool success() const { return !collision && contact && force_closure && stable; }
};

/// Scene geometry cached for repeated attempts.
class PreparedScene {
 public:
  explicit PreparedScene(const Scene& scene);

  bool empty() const { return !has_object_; }
  const Polygon& footprint() const { return footprint_; }
  Vec2 center_of_mass() const { return com_; }
  double height_mm() const { return height_; }
  /// Centre and radius of a disk containing the footprint.
  Vec2 bound_center() const { return bound_center_; }
  double bound_radius() const { return bound_radius_; }

 private:
  bool has_object_ = false;
  Polygon footprint_;
  Vec2 com_;
  double height_ = 0.0;
  Vec2 bound_center_;
  double bound_radius_ = 0.0;
};

/// Evaluates the four conditions at a gripper pose. `theta` is taken as
/// given (not reduced) so that the half-turn symmetry can be checked.
GraspDiagnostics diagnose_grasp(const PreparedScene& scene, const GripperSpec& gripper, double u_mm, double v_mm,
                                double theta);
GraspDiagnostics diagnose_grasp(const Scene& scene, const GripperSpec& gripper, const Pose& q);

/// True iff the quasi-static model predicts the object is lifted. Defined
/// for any pose; poses away from the object simply fail.
bool attempt_grasp(const PreparedScene& scene, const GripperSpec& gripper, const Pose& q);
bool attempt_grasp(const Scene& scene, const GripperSpec& gripper, const Pose& q);

inline constexpr int kAttemptsPerPose = 5;

/// The five jittered poses for a cell, uniform over its continuous extent,
/// drawn from a stream keyed by (seed, flat index).
std::array<Pose, kAttemptsPerPose> jitter_poses(const PoseGrid& grid, std::size_t i, std::uint64_t seed);

/// Successes / 5 for the jittered attempts around cell i.
double score_pose(const PreparedScene& scene, const GripperSpec& gripper, const PoseGrid& grid, std::size_t i,
                  std::uint64_t seed);
double score_pose(const Scene& scene, const GripperSpec& gripper, const PoseGrid& grid, std::size_t i,
                  std::uint64_t seed);

/// Scores at an explicit list of attempt poses.
double score_attempts(const PreparedScene& scene, const GripperSpec& gripper, std::span<const Pose> attempts);

/// score_pose over every flat index. `jobs` > 1 splits cells across
/// threads; the result does not depend on the split.
GraspFunction compute_grasp_function(const Scene& scene, const GripperSpec& gripper, const PoseGrid& grid,
                                     std::uint64_t seed, int jobs = 1);

void to_json(nlohmann::json& j, const GripperSpec& g);

}  // namespace graspfn
