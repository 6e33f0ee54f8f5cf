#include "graspfn/grasp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "graspfn/error.hpp"
#include "graspfn/random.hpp"

namespace graspfn {

namespace {

constexpr double kAreaEps = 1e-9;

// Clip tags for the jaw region and contact bands.
enum ClipTag : int { kJawPos = 0, kJawNeg, kJawTop, kJawBottom, kPatch };

bool overlaps(const TaggedPolygon& local, double s_lo, double s_hi, double half_w) {
  TaggedPolygon p = clip_half_plane(local, {-1, 0}, -s_lo, 10);
  p = clip_half_plane(p, {1, 0}, s_hi, 11);
  p = clip_half_plane(p, {0, 1}, half_w, 12);
  p = clip_half_plane(p, {0, -1}, half_w, 13);
  return signed_area(p) > kAreaEps;
}

struct PatchNormal {
  Vec2 sum;          // length-weighted outward normal
  double t_min = INFINITY;
  double t_max = -INFINITY;
};

// Boundary edges of `patch` whose outward normal has the given sign along s.
PatchNormal patch_normal(const TaggedPolygon& patch, double sign) {
  PatchNormal out;
  const std::size_t n = patch.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (patch[i].edge_tag != kBoundary) continue;
    const Vec2 a = patch[i].p;
    const Vec2 b = patch[(i + 1) % n].p;
    const Vec2 d = b - a;
    const double len = norm(d);
    if (len < 1e-12) continue;
    const Vec2 nrm{d.y / len, -d.x / len};
    if (sign * nrm.x <= 1e-12) continue;
    out.sum = out.sum + len * nrm;
    out.t_min = std::min({out.t_min, a.y, b.y});
    out.t_max = std::max({out.t_max, a.y, b.y});
  }
  return out;
}

// Extent along s of the material inside |s| <= half_gap, |t| <= half_w.
// Read off the clipped polygon's vertices this would include the zero-width
// bridges that clipping a non-convex outline leaves along the clip lines, so
// the extremes are taken from the outline's edges clipped to the rectangle
// (Liang-Barsky) plus any rectangle corner covered by material.
bool material_s_extent(const Polygon& outline, double half_gap, double half_w, double& s_min, double& s_max) {
  s_min = INFINITY;
  s_max = -INFINITY;
  const std::size_t n = outline.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = outline[i], d = outline[(i + 1) % n] - a;
    double t0 = 0.0, t1 = 1.0;
    bool inside = true;
    const double p[4] = {-d.x, d.x, -d.y, d.y};
    const double q[4] = {a.x + half_gap, half_gap - a.x, a.y + half_w, half_w - a.y};
    for (int k = 0; k < 4 && inside; ++k) {
      if (p[k] == 0.0) {
        inside = q[k] >= 0.0;
      } else {
        const double r = q[k] / p[k];
        if (p[k] < 0.0) t0 = std::max(t0, r);
        else t1 = std::min(t1, r);
        inside = t0 <= t1;
      }
    }
    if (!inside) continue;
    for (double t : {t0, t1}) {
      const double x = a.x + t * d.x;
      s_min = std::min(s_min, x);
      s_max = std::max(s_max, x);
    }
  }
  for (double cs : {-half_gap, half_gap})
    for (double ct : {-half_w, half_w})
      if (contains(outline, {cs, ct})) {
        s_min = std::min(s_min, cs);
        s_max = std::max(s_max, cs);
      }
  s_min = std::max(s_min, -half_gap);
  s_max = std::min(s_max, half_gap);
  return s_min <= s_max;
}

}  // namespace

void GripperSpec::validate() const {
  if (!(finger_gap_mm > 0 && finger_width_mm > 0 && finger_thickness_mm > 0 && tip_clearance_mm > 0 &&
        lift_height_mm > 0 && friction_mu > 0 && contact_depth_mm > 0))
    throw ConfigError("gripper: all dimensions must be positive");
  if (!(finger_gap_mm > finger_thickness_mm)) throw ConfigError("gripper: finger_gap must exceed finger_thickness");
}

PreparedScene::PreparedScene(const Scene& scene) {
  if (!scene.object) return;
  has_object_ = true;
  footprint_ = scene.object->world_footprint();
  com_ = area_centroid(footprint_);
  height_ = scene.object->height_mm;
  const Bounds b = bounds(footprint_);
  bound_center_ = 0.5 * (b.min + b.max);
  for (const Vec2& p : footprint_) bound_radius_ = std::max(bound_radius_, norm(p - bound_center_));
}

GraspDiagnostics diagnose_grasp(const PreparedScene& scene, const GripperSpec& gripper, double u_mm, double v_mm,
                                double theta) {
  GraspDiagnostics d;
  if (scene.empty() || !(scene.height_mm() > gripper.tip_clearance_mm)) return d;

  const double half_gap = 0.5 * gripper.finger_gap_mm;
  const double half_w = 0.5 * gripper.finger_width_mm;
  const double reach = std::hypot(half_gap + gripper.finger_thickness_mm, half_w);
  const Vec2 center{u_mm, v_mm};
  if (norm(scene.bound_center() - center) > scene.bound_radius() + reach) return d;

  // Gripper frame: s along the closing axis, t along the jaw line.
  const Vec2 axis{std::cos(theta), std::sin(theta)};
  const Vec2 jaw{-axis.y, axis.x};
  TaggedPolygon local;
  local.reserve(scene.footprint().size());
  for (const Vec2& p : scene.footprint()) {
    const Vec2 r = p - center;
    local.push_back({{dot(r, axis), dot(r, jaw)}, kBoundary});
  }

  // (1) fingers at the open position
  const double outer = half_gap + gripper.finger_thickness_mm;
  if (overlaps(local, half_gap, outer, half_w) || overlaps(local, -outer, -half_gap, half_w)) {
    d.collision = true;
    return d;
  }

  // (2) material swept by the closing fingers
  TaggedPolygon jaw_region = clip_half_plane(local, {1, 0}, half_gap, kJawPos);
  jaw_region = clip_half_plane(jaw_region, {-1, 0}, half_gap, kJawNeg);
  jaw_region = clip_half_plane(jaw_region, {0, 1}, half_w, kJawTop);
  jaw_region = clip_half_plane(jaw_region, {0, -1}, half_w, kJawBottom);
  if (signed_area(jaw_region) <= kAreaEps) return d;
  Polygon outline;
  outline.reserve(local.size());
  for (const TaggedVertex& v : local) outline.push_back(v.p);
  double s_min, s_max;
  if (!material_s_extent(outline, half_gap, half_w, s_min, s_max)) return d;
  d.width_mm = s_max - s_min;
  d.contact = d.width_mm > 1e-9 && d.width_mm < gripper.finger_gap_mm;
  if (!d.contact) return d;

  // (3) contact patches and friction cones
  const TaggedPolygon patch_pos = clip_half_plane(jaw_region, {-1, 0}, -(s_max - gripper.contact_depth_mm), kPatch);
  const TaggedPolygon patch_neg = clip_half_plane(jaw_region, {1, 0}, s_min + gripper.contact_depth_mm, kPatch);
  const PatchNormal np = patch_normal(patch_pos, 1.0);
  const PatchNormal nn = patch_normal(patch_neg, -1.0);
  const double lp = norm(np.sum), ln = norm(nn.sum);
  if (lp < 1e-12 || ln < 1e-12) return d;
  d.normal_angle_pos = std::acos(std::clamp(np.sum.x / lp, -1.0, 1.0));
  d.normal_angle_neg = std::acos(std::clamp(-nn.sum.x / ln, -1.0, 1.0));
  const double cone = std::atan(gripper.friction_mu);
  d.force_closure = d.normal_angle_pos <= cone + 1e-12 && d.normal_angle_neg <= cone + 1e-12;

  // (4) torque-out proxy along the jaw line
  d.contact_t_min = std::min(np.t_min, nn.t_min);
  d.contact_t_max = std::max(np.t_max, nn.t_max);
  d.com_offset_mm = dot(scene.center_of_mass() - center, jaw);
  d.stable = d.com_offset_mm >= d.contact_t_min - half_w && d.com_offset_mm <= d.contact_t_max + half_w;
  return d;
}

GraspDiagnostics diagnose_grasp(const Scene& scene, const GripperSpec& gripper, const Pose& q) {
  return diagnose_grasp(PreparedScene(scene), gripper, q.u(), q.v(), q.theta());
}

bool attempt_grasp(const PreparedScene& scene, const GripperSpec& gripper, const Pose& q) {
  return diagnose_grasp(scene, gripper, q.u(), q.v(), q.theta()).success();
}

bool attempt_grasp(const Scene& scene, const GripperSpec& gripper, const Pose& q) {
  return attempt_grasp(PreparedScene(scene), gripper, q);
}

std::array<Pose, kAttemptsPerPose> jitter_poses(const PoseGrid& grid, std::size_t i, std::uint64_t seed) {
  const Pose c = index_to_pose(grid, i);
  Rng rng(derive_seed(seed, "jitter", {static_cast<std::uint64_t>(i)}));
  const double hu = 0.5 * grid.cell_uv_mm, ht = 0.5 * grid.cell_theta();
  std::array<Pose, kAttemptsPerPose> out;
  for (Pose& p : out) {
    const double du = rng.uniform(-hu, hu);
    const double dv = rng.uniform(-hu, hu);
    const double dt = rng.uniform(-ht, ht);
    p = Pose(c.u() + du, c.v() + dv, c.theta() + dt);
  }
  return out;
}

double score_attempts(const PreparedScene& scene, const GripperSpec& gripper, std::span<const Pose> attempts) {
  if (attempts.empty()) return 0.0;
  int ok = 0;
  for (const Pose& p : attempts) ok += attempt_grasp(scene, gripper, p) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(attempts.size());
}

double score_pose(const PreparedScene& scene, const GripperSpec& gripper, const PoseGrid& grid, std::size_t i,
                  std::uint64_t seed) {
  const auto attempts = jitter_poses(grid, i, seed);
  return score_attempts(scene, gripper, attempts);
}

double score_pose(const Scene& scene, const GripperSpec& gripper, const PoseGrid& grid, std::size_t i,
                  std::uint64_t seed) {
  return score_pose(PreparedScene(scene), gripper, grid, i, seed);
}

GraspFunction compute_grasp_function(const Scene& scene, const GripperSpec& gripper, const PoseGrid& grid,
                                     std::uint64_t seed, int jobs) {
  gripper.validate();
  grid.validate();
  const PreparedScene prepared(scene);
  GraspFunction f(grid, 0.0);
  f.provenance.kind = "oracle";
  f.provenance.seed = seed;
  if (prepared.empty()) return f;
  const std::size_t n = grid.size();
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) f.scores[i] = score_pose(prepared, gripper, grid, i, seed);
  };
  const std::size_t threads = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return f;
}

void to_json(nlohmann::json& j, const GripperSpec& g) {
  j = {{"finger_gap_mm", g.finger_gap_mm},         {"finger_width_mm", g.finger_width_mm},
       {"finger_thickness_mm", g.finger_thickness_mm}, {"tip_clearance_mm", g.tip_clearance_mm},
       {"lift_height_mm", g.lift_height_mm},       {"friction_mu", g.friction_mu},
       {"contact_depth_mm", g.contact_depth_mm}};
}

}  // namespace graspfn
