#include "graspfn/pose_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "graspfn/error.hpp"
#include "graspfn/grasp_function.hpp"

namespace graspfn {

namespace {

constexpr double kPi = std::numbers::pi;

// Snaps values within rounding noise of an integer so that cell centres
// quantize and interpolate exactly.
double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

int nearest_lower_tie(double c) { return static_cast<int>(std::ceil(snap(c) - 0.5)); }

}  // namespace

double reduce_angle(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t = 0.0;
  return t;
}

PoseGrid PoseGrid::centered(int nu, int nv, int ntheta, double cell_uv_mm, double px_per_mm) {
  PoseGrid g;
  g.nu = nu;
  g.nv = nv;
  g.ntheta = ntheta;
  g.cell_uv_mm = cell_uv_mm;
  g.px_per_mm = px_per_mm;
  g.origin = Pose(-0.5 * (nu - 1) * cell_uv_mm, -0.5 * (nv - 1) * cell_uv_mm, 0.0);
  return g;
}

PoseGrid PoseGrid::desk() { return centered(24, 18, 6, 10.0, 1.4); }
PoseGrid PoseGrid::paper() { return centered(44, 33, 6, 10.0, 1.4); }

double PoseGrid::cell_theta() const { return kPi / ntheta; }

CellIndex PoseGrid::cell(std::size_t i) const {
  CellIndex c;
  c.ku = static_cast<int>(i % nu);
  c.kv = static_cast<int>((i / nu) % nv);
  c.kt = static_cast<int>(i / (static_cast<std::size_t>(nu) * nv));
  return c;
}

bool PoseGrid::in_extent(double u_mm, double v_mm) const {
  return u_mm >= u_min() && u_mm <= u_max() && v_mm >= v_min() && v_mm <= v_max();
}

int PoseGrid::image_width() const { return static_cast<int>(std::lround(nu * cell_uv_mm * px_per_mm)); }
int PoseGrid::image_height() const { return static_cast<int>(std::lround(nv * cell_uv_mm * px_per_mm)); }

void PoseGrid::validate() const {
  if (nu < 1 || nv < 1 || ntheta < 1) throw ConfigError("pose grid: cell counts must be positive");
  if (!(cell_uv_mm > 0.0) || !std::isfinite(cell_uv_mm))
    throw ConfigError("pose grid: cell_uv_mm must be positive");
  if (!(px_per_mm > 0.0) || !std::isfinite(px_per_mm))
    throw ConfigError("pose grid: px_per_mm must be positive");
  if (!std::isfinite(origin.u()) || !std::isfinite(origin.v()))
    throw ConfigError("pose grid: origin must be finite");
}

std::size_t pose_to_index(const PoseGrid& grid, const Pose& q) {
  if (!(q.u() >= grid.u_min() && q.u() <= grid.u_max()))
    throw RangeError("pose u = " + std::to_string(q.u()) + " mm is outside the grid extent");
  if (!(q.v() >= grid.v_min() && q.v() <= grid.v_max()))
    throw RangeError("pose v = " + std::to_string(q.v()) + " mm is outside the grid extent");
  const int ku = std::clamp(nearest_lower_tie((q.u() - grid.origin.u()) / grid.cell_uv_mm), 0, grid.nu - 1);
  const int kv = std::clamp(nearest_lower_tie((q.v() - grid.origin.v()) / grid.cell_uv_mm), 0, grid.nv - 1);
  int kt = nearest_lower_tie((q.theta() - grid.origin.theta()) / grid.cell_theta());
  kt %= grid.ntheta;
  if (kt < 0) kt += grid.ntheta;
  return grid.flat({ku, kv, kt});
}

Pose index_to_pose(const PoseGrid& grid, std::size_t i) {
  if (i >= grid.size())
    throw RangeError("flat index " + std::to_string(i) + " is outside [0, " + std::to_string(grid.size()) + ")");
  const CellIndex c = grid.cell(i);
  return Pose(grid.origin.u() + c.ku * grid.cell_uv_mm, grid.origin.v() + c.kv * grid.cell_uv_mm,
              grid.origin.theta() + c.kt * grid.cell_theta());
}

namespace {

void check_rigid(const Eigen::Matrix4d& t, const char* name) {
  const Eigen::Matrix3d r = t.topLeftCorner<3, 3>();
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9)
    throw ConfigError(std::string("calibration: ") + name + " rotation is not a proper rotation");
  if ((t.bottomRows<1>() - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError(std::string("calibration: ") + name + " is not homogeneous");
  if (!t.allFinite()) throw ConfigError(std::string("calibration: ") + name + " is not finite");
}

}  // namespace

void CalibrationChain::validate() const {
  check_rigid(robot_to_gripper, "robot_to_gripper");
  check_rigid(gripper_to_camera, "gripper_to_camera");
  if (!std::isfinite(surface_depth_m)) throw ConfigError("calibration: surface depth must be finite");
}

Eigen::Matrix4d image_to_camera(const CalibrationChain& chain, const Pose& p) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  const double c = std::cos(p.theta()), s = std::sin(p.theta());
  t(0, 0) = c;
  t(0, 1) = -s;
  t(1, 0) = s;
  t(1, 1) = c;
  t(0, 3) = p.u() * 1e-3;
  t(1, 3) = p.v() * 1e-3;
  t(2, 3) = chain.surface_depth_m;
  return t;
}

Eigen::Matrix4d image_to_robot(const CalibrationChain& chain, const Pose& p) {
  chain.validate();
  return chain.robot_to_gripper * chain.gripper_to_camera * image_to_camera(chain, p);
}

GraspFunction shift_rotate_function(const PoseGrid& grid, const GraspFunction& f, int du, int dv,
                                    int dtheta) {
  if (std::abs(du) >= grid.nu || std::abs(dv) >= grid.nv)
    throw RangeError("shift (" + std::to_string(du) + ", " + std::to_string(dv) +
                     ") cells exceeds the grid");
  if (f.scores.size() != grid.size()) throw ContentError("grasp function does not match the grid");
  GraspFunction out(grid, 0.0);
  out.provenance = f.provenance;
  const int nt = grid.ntheta;
  const int st = ((dtheta % nt) + nt) % nt;
  for (int kt = 0; kt < nt; ++kt) {
    const int tt = (kt + st) % nt;
    for (int kv = 0; kv < grid.nv; ++kv) {
      const int tv = kv + dv;
      if (tv < 0 || tv >= grid.nv) continue;
      for (int ku = 0; ku < grid.nu; ++ku) {
        const int tu = ku + du;
        if (tu < 0 || tu >= grid.nu) continue;
        out.scores[grid.flat({tu, tv, tt})] = f.scores[grid.flat({ku, kv, kt})];
      }
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const PoseGrid& g) {
  j = nlohmann::json{{"nu", g.nu},
                     {"nv", g.nv},
                     {"ntheta", g.ntheta},
                     {"cell_uv_mm", g.cell_uv_mm},
                     {"origin_u_mm", g.origin.u()},
                     {"origin_v_mm", g.origin.v()},
                     {"origin_theta_rad", g.origin.theta()},
                     {"px_per_mm", g.px_per_mm}};
}

void from_json(const nlohmann::json& j, PoseGrid& g) {
  const int nu = j.at("nu").get<int>();
  const int nv = j.at("nv").get<int>();
  const int nt = j.at("ntheta").get<int>();
  const double cell = j.at("cell_uv_mm").get<double>();
  const double ppm = j.value("px_per_mm", 1.4);
  g = PoseGrid::centered(nu, nv, nt, cell, ppm);
  if (j.contains("origin_u_mm") || j.contains("origin_v_mm") || j.contains("origin_theta_rad"))
    g.origin = Pose(j.value("origin_u_mm", g.origin.u()), j.value("origin_v_mm", g.origin.v()),
                    j.value("origin_theta_rad", 0.0));
  g.validate();
}

}  // namespace graspfn
