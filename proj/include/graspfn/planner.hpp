#pragma once

#include <cstdint>
#include <string>

#include "graspfn/depth_image.hpp"
#include "graspfn/grasp_function.hpp"
#include "graspfn/grasp_ops.hpp"
#include "graspfn/pose_grid.hpp"

namespace graspfn {

enum class Method { Centroid, Best, Robust };

std::string to_string(Method m);  // centroid | best | robust
Method method_from_string(const std::string& s);

/// Pixels nearer than plane_depth_mm - margin_mm are foreground.
inline constexpr double kForegroundMarginMm = 5.0;

/// Centroid of the foreground mask, with the closing axis along the minor
/// principal direction of the mask (perpendicular to the dominant one).
/// An isotropic mask (eigenvalue ratio within 1e-6 of 1) gives theta 0.
/// Throws ContentError when no pixel is foreground.
Pose centroid_plan(const DepthImage& img, const PoseGrid& grid, double plane_depth_mm,
                   double margin_mm = kForegroundMarginMm);

/// argmax_continuous on the raw function.
PlannedPose best_grasp_plan(const GraspFunction& f, int refine = 10);
/// argmax_continuous on the function smoothed by the uncertainty model.
PlannedPose robust_best_grasp_plan(const GraspFunction& f, const UncertaintyModel& unc, int refine = 10);

/// Target perturbed by one Gaussian draw of (u, v, theta) noise.
Pose sample_achieved_pose(const Pose& target, const UncertaintyModel& unc, std::uint64_t seed);

}  // namespace graspfn
