#pragma once

#include <span>
#include <vector>

namespace graspfn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

/// Simple polygon; counter-clockwise winding is expected wherever an
/// outward normal is derived from edge direction.
using Polygon = std::vector<Vec2>;

struct Bounds {
  Vec2 min;
  Vec2 max;
};

double signed_area(std::span<const Vec2> poly);
/// Area-weighted centroid (uniform density). Degenerate polygons return
/// the vertex mean.
Vec2 area_centroid(std::span<const Vec2> poly);
Bounds bounds(std::span<const Vec2> poly);
/// Even-odd point-in-polygon test. Points exactly on an edge may go
/// either way.
bool contains(std::span<const Vec2> poly, Vec2 p);
/// Largest distance between any two vertices.
double diameter(std::span<const Vec2> poly);
/// No two non-adjacent edges intersect and no vertex repeats.
bool is_simple(std::span<const Vec2> poly);
/// Monotone-chain hull, counter-clockwise, collinear points dropped.
Polygon convex_hull(std::vector<Vec2> points);
/// Rotates by `angle` about the origin, then translates.
Polygon transformed(std::span<const Vec2> poly, double angle, Vec2 translation);

/// Vertex carrying the tag of the edge that starts at it. Tag kBoundary
/// marks an edge of the original polygon; other values identify the clip
/// line an edge was created on.
struct TaggedVertex {
  Vec2 p;
  int edge_tag;
};
using TaggedPolygon = std::vector<TaggedVertex>;
inline constexpr int kBoundary = -1;

TaggedPolygon tag_boundary(std::span<const Vec2> poly);

/// Sutherland-Hodgman step: keeps the part with dot(normal, p) <= offset.
/// Non-convex input may produce zero-width bridges along the clip line;
/// area and boundary-tagged edges stay exact.
TaggedPolygon clip_half_plane(const TaggedPolygon& poly, Vec2 normal, double offset, int tag);

double signed_area(const TaggedPolygon& poly);

}  // namespace graspfn
