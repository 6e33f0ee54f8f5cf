#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "json.hpp"

namespace graspfn {

/// Reduces an angle into [0, pi); the parallel-jaw gripper is symmetric
/// under a half turn.
double reduce_angle(double theta);

/// Gripper pose in image coordinates: (u, v) is the offset of the gripper
/// centre from the image centre in millimetres (u along image columns, v
/// along image rows) and theta is the direction of the closing axis,
/// measured from +u towards +v.
class Pose {
 public:
  Pose() = default;
  Pose(double u_mm, double v_mm, double theta) : u_(u_mm), v_(v_mm), theta_(reduce_angle(theta)) {}

  double u() const { return u_; }
  double v() const { return v_; }
  double theta() const { return theta_; }

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  double u_ = 0.0;
  double v_ = 0.0;
  double theta_ = 0.0;
};

struct CellIndex {
  int ku = 0;
  int kv = 0;
  int kt = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Discrete pose space. Flat indices are theta-major, then v, then u:
///   i = (kt * nv + kv) * nu + ku
/// This layout is part of the on-disk grasp-function format.
struct PoseGrid {
  int nu = 24;
  int nv = 18;
  int ntheta = 6;
  double cell_uv_mm = 10.0;
  Pose origin{-115.0, -85.0, 0.0};  // centre of cell (0, 0, 0)
  double px_per_mm = 1.4;

  /// Grid whose cells tile an image centred on (u, v) = (0, 0).
  static PoseGrid centered(int nu, int nv, int ntheta, double cell_uv_mm, double px_per_mm);
  /// 24 x 18 x 6 over a 240 x 180 mm workspace.
  static PoseGrid desk();
  /// 44 x 33 x 6 = 8712 poses, ~640 x 480 pixel image.
  static PoseGrid paper();

  double cell_theta() const;
  std::size_t size() const { return static_cast<std::size_t>(nu) * nv * ntheta; }
  std::size_t flat(CellIndex c) const {
    return (static_cast<std::size_t>(c.kt) * nv + c.kv) * nu + c.ku;
  }
  CellIndex cell(std::size_t i) const;

  double u_min() const { return origin.u() - 0.5 * cell_uv_mm; }
  double u_max() const { return origin.u() + (nu - 0.5) * cell_uv_mm; }
  double v_min() const { return origin.v() - 0.5 * cell_uv_mm; }
  double v_max() const { return origin.v() + (nv - 0.5) * cell_uv_mm; }
  bool in_extent(double u_mm, double v_mm) const;

  /// Rendered image size covering the grid extent.
  int image_width() const;
  int image_height() const;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  friend bool operator==(const PoseGrid&, const PoseGrid&) = default;
};

/// Nearest cell centre; exact half-cell ties go to the lower index.
/// Throws RangeError naming the axis when (u, v) is outside the extent.
std::size_t pose_to_index(const PoseGrid& grid, const Pose& q);
Pose index_to_pose(const PoseGrid& grid, std::size_t i);

/// Rigid chain from image-plane poses to the robot base frame, all in
/// metres. The image-to-camera step lifts (u, v, theta) to the supporting
/// surface at a fixed depth along the optical axis, rotated by theta about
/// that axis.
struct CalibrationChain {
  Eigen::Matrix4d robot_to_gripper = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d gripper_to_camera = Eigen::Matrix4d::Identity();
  double surface_depth_m = 0.0;

  void validate() const;
};

Eigen::Matrix4d image_to_camera(const CalibrationChain& chain, const Pose& p);
/// robot_to_gripper * gripper_to_camera * image_to_camera(p).
Eigen::Matrix4d image_to_robot(const CalibrationChain& chain, const Pose& p);

struct GraspFunction;

/// Relocates scores as if the scene moved by (du, dv) whole cells and the
/// theta index advanced by dtheta cells (cyclic). Cells shifted in from
/// outside the grid get 0. Requires |du| < nu and |dv| < nv.
GraspFunction shift_rotate_function(const PoseGrid& grid, const GraspFunction& f, int du, int dv,
                                    int dtheta);

void to_json(nlohmann::json& j, const PoseGrid& g);
void from_json(const nlohmann::json& j, PoseGrid& g);

}  // namespace graspfn
