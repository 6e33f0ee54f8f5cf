#include <cmath>
#include <numbers>

#include "doctest.h"
#include "graspfn/augment.hpp"
#include "graspfn/grasp_oracle.hpp"
#include "test_support.hpp"

using namespace graspfn;
using testing_support::random_function;

namespace {

// Rigidly rotates the scene about the image centre by `angle`.
Scene rotated_scene(Scene s, double angle) {
  PlanarPose& p = s.object->pose_on_plane;
  const double c = std::cos(angle), sn = std::sin(angle);
  const double x = c * p.x_mm - sn * p.y_mm, y = sn * p.x_mm + c * p.y_mm;
  p = {x, y, p.phi_rad + angle};
  return s;
}

}  // namespace

TEST_CASE("identity augmentation leaves both sides untouched") {
  const PoseGrid g = PoseGrid::desk();
  const GraspFunction f = random_function(g, 1);
  CHECK(augment_function(f, {}).scores == f.scores);
  CHECK(rotate_function(f, 12).scores == f.scores);
  const DepthImage img = render_depth(place_object(generate_object(2), 2, g), g);
  CHECK(augment_image(img, g, {}, 600.0) == img);
}

TEST_CASE("half-turn rotation reverses the lattice exactly") {
  const PoseGrid g = PoseGrid::desk();
  const GraspFunction f = random_function(g, 4);
  const GraspFunction r = rotate_function(f, 6);
  for (int kt = 0; kt < g.ntheta; ++kt)
    for (int kv = 0; kv < g.nv; ++kv)
      for (int ku = 0; ku < g.nu; ++ku) REQUIRE(r.at(ku, kv, kt) == f.at(g.nu - 1 - ku, g.nv - 1 - kv, kt));
  CHECK(rotate_function(r, 6).scores == f.scores);
  CHECK(rotate_function(f, -6).scores == r.scores);
}

TEST_CASE("quarter-turn rotation advances theta by three slabs") {
  const PoseGrid g = PoseGrid::desk();
  GraspFunction f(g);
  f.at(12, 9, 1) = 1.0;  // cell centre (5, 5)
  const GraspFunction r = rotate_function(f, 3);
  // (5, 5) rotated by +90 deg is (-5, 5).
  CHECK(r.at(11, 9, 4) == 1.0);
  double total = 0;
  for (double v : r.scores) total += v;
  CHECK(total == 1.0);
}

TEST_CASE("shift part matches shift_rotate_function") {
  const PoseGrid g = PoseGrid::desk();
  const GraspFunction f = random_function(g, 8);
  const GraspFunction a = augment_function(f, {0, 2, -3});
  CHECK(a.scores == shift_rotate_function(g, f, 2, -3, 0).scores);
  CHECK(a.provenance.kind == "transformed");
}

TEST_CASE("image and label augmentations agree with re-simulating the scene") {
  const PoseGrid g = PoseGrid::desk();
  const GripperSpec grip;
  const double angle = 3 * g.cell_theta();
  double label_diff = 0.0;
  int cells = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Scene a = place_object(generate_object(s), s, g, {}, Placement::Centered);
    const Scene b = rotated_scene(a, angle);
    const DepthImage ia = render_depth(a, g), ib = render_depth(b, g);
    const DepthImage aug = augment_image(ia, g, {3, 0, 0}, a.plane_z_mm);
    int bad = 0;
    for (std::size_t p = 0; p < ib.data.size(); ++p) bad += std::abs(aug.data[p] - ib.data[p]) > 1.0;
    CHECK(bad < static_cast<int>(ib.data.size() / 50));

    const GraspFunction fa = augment_function(compute_grasp_function(a, grip, g, 9), {3, 0, 0});
    const GraspFunction fb = compute_grasp_function(b, grip, g, 9);
    for (std::size_t i = 0; i < g.size(); ++i) label_diff += std::abs(fa.scores[i] - fb.scores[i]), ++cells;
  }
  CHECK(label_diff / cells < 0.02);
}

TEST_CASE("sampled augmentations") {
  const PoseGrid g = PoseGrid::desk();
  const auto a = sample_augmentations(g, 100, 3, 5);
  REQUIRE(a.size() == 100);
  CHECK(a[0] == Augmentation{});
  bool rotated = false;
  for (const auto& x : a) {
    CHECK((x.rotation_steps >= 0 && x.rotation_steps < 12));
    CHECK(std::abs(x.du) <= 3);
    CHECK(std::abs(x.dv) <= 3);
    rotated |= x.rotation_steps != 0;
  }
  CHECK(rotated);
  CHECK(sample_augmentations(g, 100, 3, 5) == a);
  CHECK_FALSE(sample_augmentations(g, 100, 3, 6) == a);
  CHECK(sample_augmentations(g, 0, 3, 5).empty());
}
