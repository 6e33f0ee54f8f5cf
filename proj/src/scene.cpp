#include "graspfn/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "graspfn/error.hpp"
#include "graspfn/random.hpp"

namespace graspfn {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<const char*, 7> kFamilyNames = {"convex_blob", "l_shape", "t_shape", "bar",
                                                     "gap_ring",    "star",    "custom"};

Polygon make_bar(Rng& rng) {
  const double r = rng.uniform(0.12, 0.5);
  return {{-0.5, -0.5 * r}, {0.5, -0.5 * r}, {0.5, 0.5 * r}, {-0.5, 0.5 * r}};
}

Polygon make_blob(Rng& rng) {
  for (;;) {
    const int n = 7 + static_cast<int>(rng.index(6));
    const double aspect = rng.uniform(0.35, 1.0);
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(0.0, 2.0 * kPi);
      const double r = rng.uniform(0.7, 1.0);
      pts.push_back({r * std::cos(a), aspect * r * std::sin(a)});
    }
    Polygon hull = convex_hull(std::move(pts));
    if (hull.size() >= 3 && signed_area(hull) > 0.05) return hull;
  }
}

Polygon make_l(Rng& rng) {
  const double b = rng.uniform(0.4, 1.0);
  const double t = rng.uniform(0.12, 0.3);
  return {{0, 0}, {1, 0}, {1, t}, {t, t}, {t, b}, {0, b}};
}

Polygon make_t(Rng& rng) {
  const double t1 = rng.uniform(0.12, 0.3);
  const double s = rng.uniform(0.4, 1.0);
  const double h = 0.5 * rng.uniform(0.12, 0.3);
  return {{-h, 0}, {h, 0}, {h, s}, {0.5, s}, {0.5, s + t1}, {-0.5, s + t1}, {-0.5, s}, {-h, s}};
}

Polygon make_gap_ring(Rng& rng) {
  const double inner = rng.uniform(0.55, 0.8);
  const double gap = rng.uniform(50.0, 110.0) * kPi / 180.0;
  constexpr int kSegments = 20;
  Polygon p;
  for (int i = 0; i <= kSegments; ++i) {
    const double a = 0.5 * gap + i * (2.0 * kPi - gap) / kSegments;
    p.push_back({std::cos(a), std::sin(a)});
  }
  for (int i = kSegments; i >= 0; --i) {
    const double a = 0.5 * gap + i * (2.0 * kPi - gap) / kSegments;
    p.push_back({inner * std::cos(a), inner * std::sin(a)});
  }
  return p;
}

Polygon make_star(Rng& rng) {
  const int k = 4 + static_cast<int>(rng.index(4));
  const double inner = rng.uniform(0.35, 0.6);
  Polygon p;
  for (int i = 0; i < 2 * k; ++i) {
    const double a = i * kPi / k;
    const double r = (i % 2 == 0) ? 1.0 : inner;
    p.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return p;
}

// Moves the area centroid to the origin and scales to the given diameter.
Polygon normalize(Polygon p, double target_diameter) {
  const Vec2 c = area_centroid(p);
  for (Vec2& v : p) v = v - c;
  const double s = target_diameter / diameter(p);
  for (Vec2& v : p) v = s * v;
  return p;
}

}  // namespace

std::string to_string(ShapeFamily f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

ShapeFamily shape_family_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i)
    if (s == kFamilyNames[i]) return static_cast<ShapeFamily>(i);
  throw ParseError("unknown shape family '" + s + "'");
}

Polygon SceneObject::world_footprint() const {
  return transformed(footprint, pose_on_plane.phi_rad, {pose_on_plane.x_mm, pose_on_plane.y_mm});
}

Vec2 SceneObject::center_of_mass() const { return area_centroid(world_footprint()); }

void SceneObject::validate() const {
  if (footprint.size() < 3) throw ConfigError("object footprint needs at least 3 vertices");
  if (!(signed_area(footprint) > 0.0)) throw ConfigError("object footprint must be counter-clockwise with positive area");
  if (!is_simple(footprint)) throw ConfigError("object footprint is self-intersecting");
  if (!(height_mm > 0.0)) throw ConfigError("object height must be positive");
  if (!(density > 0.0)) throw ConfigError("object density must be positive");
}

void Scene::validate(const PoseGrid& grid) const {
  if (!object) return;
  object->validate();
  const Bounds b = bounds(object->world_footprint());
  if (b.min.x < grid.u_min() || b.max.x > grid.u_max() || b.min.y < grid.v_min() || b.max.y > grid.v_max())
    throw ConfigError("object extends outside the camera field of view");
}

SceneObject generate_object(std::uint64_t seed, const ObjectGenParams& params) {
  Rng rng(derive_seed(seed, "family"));
  return generate_object(seed, static_cast<ShapeFamily>(rng.index(kGeneratedFamilies)), params);
}

SceneObject generate_object(std::uint64_t seed, ShapeFamily family, const ObjectGenParams& params) {
  Rng rng(derive_seed(seed, "shape"));
  Polygon raw;
  switch (family) {
    case ShapeFamily::ConvexBlob: raw = make_blob(rng); break;
    case ShapeFamily::LShape: raw = make_l(rng); break;
    case ShapeFamily::TShape: raw = make_t(rng); break;
    case ShapeFamily::Bar: raw = make_bar(rng); break;
    case ShapeFamily::GapRing: raw = make_gap_ring(rng); break;
    case ShapeFamily::Star: raw = make_star(rng); break;
    case ShapeFamily::Custom: throw ConfigError("custom objects are not generated");
  }
  SceneObject obj;
  obj.family = family;
  obj.footprint = normalize(std::move(raw), rng.uniform(params.min_dimension_mm, params.max_dimension_mm));
  obj.height_mm = rng.uniform(params.min_height_mm, params.max_height_mm);
  return obj;
}

Scene place_object(const SceneObject& obj, std::uint64_t seed, const PoseGrid& grid,
                   const SceneParams& params, Placement mode) {
  obj.validate();
  Rng rng(derive_seed(seed, "placement"));
  constexpr int kOrientationTries = 256;
  for (int attempt = 0; attempt < kOrientationTries; ++attempt) {
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const Bounds b = bounds(transformed(obj.footprint, phi, {}));
    const double x_lo = grid.u_min() - b.min.x, x_hi = grid.u_max() - b.max.x;
    const double y_lo = grid.v_min() - b.min.y, y_hi = grid.v_max() - b.max.y;
    if (x_lo > x_hi || y_lo > y_hi) continue;
    double x = 0.0, y = 0.0;
    if (mode == Placement::Uniform) {
      x = rng.uniform(x_lo, x_hi);
      y = rng.uniform(y_lo, y_hi);
    } else if (x_lo > 0.0 || x_hi < 0.0 || y_lo > 0.0 || y_hi < 0.0) {
      continue;
    }
    Scene s;
    s.object = obj;
    s.object->pose_on_plane = {x, y, phi};
    s.plane_z_mm = params.plane_z_mm;
    s.camera_height_mm = params.camera_height_mm;
    return s;
  }
  throw ConfigError("object of size " + std::to_string(obj.max_dimension()) +
                    " mm does not fit inside the field of view");
}

SceneObject make_rectangle(double length_mm, double width_mm, double height_mm) {
  const double a = 0.5 * length_mm, b = 0.5 * width_mm;
  return make_polygon_object({{-a, -b}, {a, -b}, {a, b}, {-a, b}}, height_mm);
}

SceneObject make_disk(double diameter_mm, double height_mm, int segments) {
  Polygon p;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * kPi * i / segments;
    p.push_back({0.5 * diameter_mm * std::cos(a), 0.5 * diameter_mm * std::sin(a)});
  }
  return make_polygon_object(std::move(p), height_mm);
}

SceneObject make_polygon_object(Polygon footprint, double height_mm) {
  SceneObject obj;
  obj.family = ShapeFamily::Custom;
  obj.footprint = std::move(footprint);
  obj.height_mm = height_mm;
  return obj;
}

nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json j;
  j["format"] = "graspfn.scene";
  j["version"] = 1;
  j["plane_z_mm"] = s.plane_z_mm;
  j["camera_height_mm"] = s.camera_height_mm;
  if (!s.object) {
    j["object"] = nullptr;
    return j;
  }
  const SceneObject& o = *s.object;
  nlohmann::json fp = nlohmann::json::array();
  for (const Vec2& v : o.footprint) fp.push_back({v.x, v.y});
  j["object"] = {{"family", to_string(o.family)},
                 {"footprint_mm", fp},
                 {"height_mm", o.height_mm},
                 {"x_mm", o.pose_on_plane.x_mm},
                 {"y_mm", o.pose_on_plane.y_mm},
                 {"phi_rad", o.pose_on_plane.phi_rad},
                 {"density", o.density}};
  return j;
}

Scene scene_from_json(const nlohmann::json& j) {
  try {
    Scene s;
    s.plane_z_mm = j.value("plane_z_mm", 600.0);
    s.camera_height_mm = j.value("camera_height_mm", 600.0);
    if (j.contains("object") && !j.at("object").is_null()) {
      const auto& o = j.at("object");
      SceneObject obj;
      obj.family = shape_family_from_string(o.value("family", std::string("custom")));
      for (const auto& v : o.at("footprint_mm")) obj.footprint.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      obj.height_mm = o.at("height_mm").get<double>();
      obj.pose_on_plane = {o.value("x_mm", 0.0), o.value("y_mm", 0.0), o.value("phi_rad", 0.0)};
      obj.density = o.value("density", 1.0);
      obj.validate();
      s.object = std::move(obj);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
}

void write_scene(const std::filesystem::path& path, const Scene& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << scene_to_json(s).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Scene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace graspfn
