#include "graspfn/augment.hpp"

#include <cmath>

#include "graspfn/random.hpp"

namespace graspfn {

GraspFunction rotate_function(const GraspFunction& f, int steps) {
  const PoseGrid& g = f.grid;
  const int period = 2 * g.ntheta;
  steps = ((steps % period) + period) % period;
  GraspFunction out(g, 0.0);
  out.provenance = f.provenance;
  out.provenance.kind = "transformed";
  if (steps == 0) {
    out.scores = f.scores;
    return out;
  }
  const double angle = steps * g.cell_theta();
  const double c = std::cos(angle), s = std::sin(angle);
  const double cu = 0.5 * (g.u_min() + g.u_max()), cv = 0.5 * (g.v_min() + g.v_max());
  for (int kv = 0; kv < g.nv; ++kv)
    for (int ku = 0; ku < g.nu; ++ku) {
      const double x = g.origin.u() + ku * g.cell_uv_mm - cu;
      const double y = g.origin.v() + kv * g.cell_uv_mm - cv;
      // inverse rotation back into the source image
      const double sx = c * x + s * y + cu, sy = -s * x + c * y + cv;
      const long su = std::lround((sx - g.origin.u()) / g.cell_uv_mm);
      const long sv = std::lround((sy - g.origin.v()) / g.cell_uv_mm);
      if (su < 0 || su >= g.nu || sv < 0 || sv >= g.nv) continue;
      for (int kt = 0; kt < g.ntheta; ++kt) {
        const int st = ((kt - steps) % g.ntheta + g.ntheta) % g.ntheta;
        out.at(ku, kv, kt) = f.at(static_cast<int>(su), static_cast<int>(sv), st);
      }
    }
  return out;
}

GraspFunction augment_function(const GraspFunction& f, const Augmentation& a) {
  GraspFunction r = rotate_function(f, a.rotation_steps);
  if (a.du == 0 && a.dv == 0) return r;
  GraspFunction out = shift_rotate_function(f.grid, r, a.du, a.dv, 0);
  out.provenance.kind = "transformed";
  return out;
}

DepthImage augment_image(const DepthImage& img, const PoseGrid& grid, const Augmentation& a, double fill) {
  if (a.rotation_steps % (2 * grid.ntheta) == 0 && a.du == 0 && a.dv == 0) return img;
  const double px_per_cell = grid.cell_uv_mm * img.px_per_mm;
  return rotate_shift(img, a.rotation_steps * grid.cell_theta(), a.du * px_per_cell, a.dv * px_per_cell, fill);
}

std::vector<Augmentation> sample_augmentations(const PoseGrid& grid, int count, int max_shift_cells,
                                               std::uint64_t seed) {
  std::vector<Augmentation> out;
  if (count <= 0) return out;
  out.push_back({});
  Rng rng(derive_seed(seed, "augment"));
  const auto span = static_cast<std::uint64_t>(2 * max_shift_cells + 1);
  for (int i = 1; i < count; ++i) {
    Augmentation a;
    a.rotation_steps = static_cast<int>(rng.index(static_cast<std::uint64_t>(2 * grid.ntheta)));
    a.du = static_cast<int>(rng.index(span)) - max_shift_cells;
    a.dv = static_cast<int>(rng.index(span)) - max_shift_cells;
    out.push_back(a);
  }
  return out;
}

}  // namespace graspfn
