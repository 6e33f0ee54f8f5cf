#include "graspfn/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "graspfn/error.hpp"
#include "graspfn/random.hpp"

namespace graspfn {

std::string to_string(Method m) {
  switch (m) {
    case Method::Centroid: return "centroid";
    case Method::Best: return "best";
    case Method::Robust: return "robust";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "centroid") return Method::Centroid;
  if (s == "best") return Method::Best;
  if (s == "robust") return Method::Robust;
  throw ParseError("unknown method '" + s + "' (expected centroid, best or robust)");
}

Pose centroid_plan(const DepthImage& img, const PoseGrid& grid, double plane_depth_mm, double margin_mm) {
  const double thresh = plane_depth_mm - margin_mm;
  double n = 0.0, su = 0.0, sv = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double d = img.at(x, y);
      if (d > 0.0 && d < thresh) {
        const Vec2 c = img.pixel_center_mm(x, y);
        n += 1.0;
        su += c.x;
        sv += c.y;
      }
    }
  if (n == 0.0) throw ContentError("no foreground pixels for the centroid planner");
  const double mu = su / n, mv = sv / n;
  double cuu = 0.0, cvv = 0.0, cuv = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double d = img.at(x, y);
      if (d > 0.0 && d < thresh) {
        const Vec2 c = img.pixel_center_mm(x, y);
        const double a = c.x - mu, b = c.y - mv;
        cuu += a * a;
        cvv += b * b;
        cuv += a * b;
      }
    }
  const double half_tr = 0.5 * (cuu + cvv);
  const double disc = std::sqrt(0.25 * (cuu - cvv) * (cuu - cvv) + cuv * cuv);
  const double lmax = half_tr + disc, lmin = half_tr - disc;
  double theta = 0.0;
  if (lmax > 0.0 && lmin / lmax < 1.0 - 1e-6) {
    const double principal = 0.5 * std::atan2(2.0 * cuv, cuu - cvv);
    theta = principal + 0.5 * std::numbers::pi;
  }
  // The centroid of pixels inside the image lies inside the grid extent up
  // to the half-pixel border; clamp so downstream lookups stay in range.
  const double u = std::clamp(mu, grid.u_min(), grid.u_max());
  const double v = std::clamp(mv, grid.v_min(), grid.v_max());
  return Pose(u, v, theta);
}

PlannedPose best_grasp_plan(const GraspFunction& f, int refine) { return argmax_continuous(f, refine); }

PlannedPose robust_best_grasp_plan(const GraspFunction& f, const UncertaintyModel& unc, int refine) {
  return argmax_continuous(smooth(f, unc), refine);
}

Pose sample_achieved_pose(const Pose& target, const UncertaintyModel& unc, std::uint64_t seed) {
  unc.validate();
  if (unc.is_zero()) return target;
  Rng rng(seed);
  const double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
  double du, dv;
  if (unc.diagonal()) {
    du = std::sqrt(unc.cov_uv(0, 0)) * z1;
    dv = std::sqrt(unc.cov_uv(1, 1)) * z2;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(unc.cov_uv);
    const Eigen::Vector2d s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::Vector2d d = es.eigenvectors() * Eigen::Vector2d(s(0) * z1, s(1) * z2);
    du = d(0);
    dv = d(1);
  }
  return Pose(target.u() + du, target.v() + dv, target.theta() + unc.sigma_theta * z3);
}

}  // namespace graspfn
