#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "graspfn/geometry.hpp"
#include "graspfn/pose_grid.hpp"
#include "json.hpp"

namespace graspfn {

enum class ShapeFamily { ConvexBlob, LShape, TShape, Bar, GapRing, Star, Custom };
inline constexpr int kGeneratedFamilies = 6;

std::string to_string(ShapeFamily f);
ShapeFamily shape_family_from_string(const std::string& s);

struct PlanarPose {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double phi_rad = 0.0;
  friend bool operator==(const PlanarPose&, const PlanarPose&) = default;
};

/// Extruded polygon resting on the table. The footprint is given in the
/// object frame with its area centroid at the origin.
struct SceneObject {
  ShapeFamily family = ShapeFamily::Custom;
  Polygon footprint;
  double height_mm = 50.0;
  PlanarPose pose_on_plane;
  double density = 1.0;

  Polygon world_footprint() const;
  Vec2 center_of_mass() const;
  double max_dimension() const { return diameter(footprint); }
  void validate() const;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneParams {
  double plane_z_mm = 600.0;
  double camera_height_mm = 600.0;
};

struct Scene {
  std::optional<SceneObject> object;
  double plane_z_mm = 600.0;
  double camera_height_mm = 600.0;

  /// Throws ConfigError unless the object lies inside the image extent.
  void validate(const PoseGrid& grid) const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct ObjectGenParams {
  double min_dimension_mm = 50.0;
  double max_dimension_mm = 160.0;
  double min_height_mm = 20.0;
  double max_height_mm = 120.0;
};

/// Procedural object from one of the six generated families, scaled so its
/// maximum planar dimension is uniform in [min, max]. Pure function of the
/// seed.
SceneObject generate_object(std::uint64_t seed, const ObjectGenParams& params = {});
SceneObject generate_object(std::uint64_t seed, ShapeFamily family, const ObjectGenParams& params = {});

enum class Placement { Uniform, Centered };

/// Places the object at a random (x, y, phi) keeping the whole footprint
/// inside the image. Centered placement only randomises phi. Throws
/// ConfigError when no orientation fits.
Scene place_object(const SceneObject& obj, std::uint64_t seed, const PoseGrid& grid,
                   const SceneParams& params = {}, Placement mode = Placement::Uniform);

/// Convenience shapes, footprint centred on the origin.
SceneObject make_rectangle(double length_mm, double width_mm, double height_mm);
SceneObject make_disk(double diameter_mm, double height_mm, int segments = 64);
SceneObject make_polygon_object(Polygon footprint, double height_mm);

nlohmann::json scene_to_json(const Scene& s);
Scene scene_from_json(const nlohmann::json& j);
void write_scene(const std::filesystem::path& path, const Scene& s);
Scene read_scene(const std::filesystem::path& path);

}  // namespace graspfn
