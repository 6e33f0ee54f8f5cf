#pragma once

#include <cstdint>
#include <vector>

#include "graspfn/depth_image.hpp"
#include "graspfn/grasp_function.hpp"

namespace graspfn {

/// Rotation of the whole image by rotation_steps * cell_theta about the
/// image centre, followed by a whole-cell shift of (du, dv).
struct Augmentation {
  int rotation_steps = 0;  // in [0, 2 * ntheta)
  int du = 0;
  int dv = 0;
  friend bool operator==(const Augmentation&, const Augmentation&) = default;
};

/// Label side of a rotation: cell centres rotate about the grid centre and
/// read the nearest source cell (0 when it falls outside), and the theta
/// index advances by `steps` cyclically. Exact for steps that are
/// multiples of 2 * ntheta; otherwise a nearest-cell resampling.
GraspFunction rotate_function(const GraspFunction& f, int steps);

/// rotate_function followed by shift_rotate_function(du, dv, 0).
GraspFunction augment_function(const GraspFunction& f, const Augmentation& a);
DepthImage augment_image(const DepthImage& img, const PoseGrid& grid, const Augmentation& a, double fill);

/// `count` augmentations; the first is always the identity.
std::vector<Augmentation> sample_augmentations(const PoseGrid& grid, int count, int max_shift_cells,
                                               std::uint64_t seed);

}  // namespace graspfn
