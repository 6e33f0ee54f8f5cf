#pragma once

#include <vector>

#include <Eigen/Core>

#include "graspfn/grasp_function.hpp"
#include "graspfn/pose_grid.hpp"

namespace graspfn {

/// Gaussian spread of the achieved pose about the commanded one: a 2x2
/// covariance over (u, v) in mm^2 and an independent theta deviation in
/// radians.
struct UncertaintyModel {
  Eigen::Matrix2d cov_uv = Eigen::Matrix2d::Zero();
  double sigma_theta = 0.0;

  static UncertaintyModel isotropic(double sigma_uv_mm, double sigma_theta_rad);
  static UncertaintyModel from_degrees(double sigma_uv_mm, double sigma_theta_deg);

  bool diagonal() const { return cov_uv(0, 1) == 0.0 && cov_uv(1, 0) == 0.0; }
  bool is_zero() const { return cov_uv.isZero(0.0) && sigma_theta == 0.0; }
  /// Throws ConfigError unless the covariance is symmetric PSD.
  void validate() const;

  nlohmann::json to_json() const;
};

/// Dense weights over cell offsets [-ru, ru] x [-rv, rv] x [-rt, rt],
/// theta-major like the grid.
struct Kernel3 {
  int ru = 0;
  int rv = 0;
  int rt = 0;
  std::vector<double> weights;

  int su() const { return 2 * ru + 1; }
  int sv() const { return 2 * rv + 1; }
  int st() const { return 2 * rt + 1; }
  double at(int du, int dv, int dt) const {
    return weights[(static_cast<std::size_t>(dt + rt) * sv() + (dv + rv)) * su() + (du + ru)];
  }
};

/// One-dimensional normalised Gaussian taps over [-r, r] cells,
/// r = floor(3 sigma / cell). The periodic form sums the density over
/// shifts of -period, 0, +period.
std::vector<double> gaussian_taps(double sigma, double cell, double period = 0.0);

/// Gaussian density sampled at cell-centre offsets, truncated at 3 sigma
/// per axis and normalised to sum 1. Theta uses the wrapped density on the
/// circle of period pi.
Kernel3 gaussian_kernel(const PoseGrid& grid, const UncertaintyModel& unc);

/// Convolves scores with gaussian_kernel: theta wraps, (u, v) is zero
/// padded. Diagonal covariances run as three 1-D passes.
GraspFunction smooth(const GraspFunction& f, const UncertaintyModel& unc);
/// Convolution with an explicit kernel, looping over every tap.
GraspFunction smooth_direct(const GraspFunction& f, const Kernel3& kernel);

/// Trilinear interpolation over the cell-centre lattice; theta wraps
/// between the last and first slab, (u, v) clamps to the outermost
/// centres. Throws RangeError when (u, v) is outside the grid extent.
double interpolate(const GraspFunction& f, const Pose& q);

struct PlannedPose {
  Pose pose;
  double score = 0.0;
  std::size_t cell = 0;  // best lattice cell the refinement started from
};

/// Best lattice cell (ties to the lowest flat index), then the best
/// sample of a (2 refine + 1)^3 sub-lattice spanning +-1 cell around it.
/// Samples within 1e-12 of each other tie; ties go to the sample nearest
/// the starting cell centre, then to the first visited (theta-major).
PlannedPose argmax_continuous(const GraspFunction& f, int refine = 10);

}  // namespace graspfn
