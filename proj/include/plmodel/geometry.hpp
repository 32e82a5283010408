#pragma once

#include <cmath>
#include <vector>

namespace plmodel {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3 a, Vec3 b) = default;

  constexpr Vec2 xy() const { return {x, y}; }
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

using Polygon = std::vector<Vec2>;

// Shoelace area; positive for counter-clockwise winding.
double signed_area(const Polygon& poly);

// At least three vertices, non-zero area, and no two edges meet except
// consecutive edges at their shared vertex.
bool is_simple(const Polygon& poly);

enum class Containment { outside, boundary, inside };

Containment classify_point(const Polygon& poly, Vec2 p);

// Closed-segment intersection test (touching counts).
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

// True when the closed regions of the two polygons share any point.
bool polygons_overlap(const Polygon& a, const Polygon& b);

// Parameter intervals [t0, t1] within [0, 1] where a + t (b - a) lies in the
// closed polygon. Touching a vertex yields a degenerate interval.
struct Interval {
  double lo;
  double hi;
};
std::vector<Interval> segment_polygon_intervals(const Polygon& poly, Vec2 a, Vec2 b);

}  // namespace plmodel
