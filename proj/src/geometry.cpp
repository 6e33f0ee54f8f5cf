#include "graspfn/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace graspfn {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

double signed_area(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

Vec2 area_centroid(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n == 0) return {};
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % n];
    const double c = cross(p, q);
    a += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  if (std::abs(a) < 1e-12) {
    Vec2 m;
    for (const Vec2& p : poly) m = m + p;
    return (1.0 / static_cast<double>(n)) * m;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

Bounds bounds(std::span<const Vec2> poly) {
  Bounds b{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
  for (const Vec2& p : poly) {
    b.min.x = std::min(b.min.x, p.x);
    b.min.y = std::min(b.min.y, p.y);
    b.max.x = std::max(b.max.x, p.x);
    b.max.y = std::max(b.max.y, p.y);
  }
  return b;
}

bool contains(std::span<const Vec2> poly, Vec2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double diameter(std::span<const Vec2> poly) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    for (std::size_t j = i + 1; j < poly.size(); ++j) {
      const Vec2 d = poly[i] - poly[j];
      d2 = std::max(d2, dot(d, d));
    }
  return std::sqrt(d2);
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

bool is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (poly[i] == poly[j]) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // adjacent edges share a vertex by construction
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      const Vec2 c = poly[j], d = poly[(j + 1) % n];
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

Polygon convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(),
            [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  Polygon hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    const Vec2 p = pts[i];
    while (k >= t && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

Polygon transformed(std::span<const Vec2> poly, double angle, Vec2 translation) {
  const double c = std::cos(angle), s = std::sin(angle);
  Polygon out;
  out.reserve(poly.size());
  for (const Vec2& p : poly) out.push_back({c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y});
  return out;
}

TaggedPolygon tag_boundary(std::span<const Vec2> poly) {
  TaggedPolygon out;
  out.reserve(poly.size());
  for (const Vec2& p : poly) out.push_back({p, kBoundary});
  return out;
}

TaggedPolygon clip_half_plane(const TaggedPolygon& poly, Vec2 normal, double offset, int tag) {
  TaggedPolygon out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  out.reserve(n + 4);
  for (std::size_t i = 0; i < n; ++i) {
    const TaggedVertex& cur = poly[i];
    const TaggedVertex& nxt = poly[(i + 1) % n];
    const double dc = dot(normal, cur.p) - offset;
    const double dn = dot(normal, nxt.p) - offset;
    const bool cur_in = dc <= 0.0;
    const bool nxt_in = dn <= 0.0;
    if (cur_in) {
      out.push_back(cur);
      if (!nxt_in) {
        const double t = dc / (dc - dn);
        // Leaving: the edge from the exit point runs along the clip line.
        out.push_back({cur.p + t * (nxt.p - cur.p), tag});
      }
    } else if (nxt_in) {
      const double t = dc / (dc - dn);
      out.push_back({cur.p + t * (nxt.p - cur.p), cur.edge_tag});
    }
  }
  return out;
}

double signed_area(const TaggedPolygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) a += cross(poly[i].p, poly[(i + 1) % n].p);
  return 0.5 * a;
}

}  // namespace graspfn
