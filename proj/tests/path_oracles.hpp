#pragma once

#include <algorithm>
#include <cmath>

#include "plmodel/geometry.hpp"
#include "plmodel/raysim.hpp"
#include "plmodel/scene.hpp"

// Geometric checks for traced paths, independent of the tracer's own mirroring.
namespace plmodel::test {

inline Vec3 outward_normal(const Scene& scene, const Interaction& it) {
  if (it.surface == SurfaceKind::ground) return {0, 0, 1};
  const Polygon& fp = scene.buildings()[static_cast<std::size_t>(it.building)].footprint;
  const Vec2 a = fp[static_cast<std::size_t>(it.edge)];
  const Vec2 b = fp[(static_cast<std::size_t>(it.edge) + 1) % fp.size()];
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  return {(b.y - a.y) / len, -(b.x - a.x) / len, 0};
}

inline Vec3 plane_point(const Scene& scene, const Interaction& it) {
  if (it.surface == SurfaceKind::ground) return {0, 0, 0};
  const Polygon& fp = scene.buildings()[static_cast<std::size_t>(it.building)].footprint;
  const Vec2 a = fp[static_cast<std::size_t>(it.edge)];
  return {a.x, a.y, 0};
}

inline Vec3 unit(Vec3 v) { return (1.0 / norm(v)) * v; }

inline double angle_to_normal(Vec3 d, Vec3 n) {
  const double c = std::abs(dot(d, n));
  const Vec3 t = d - dot(d, n) * n;
  return std::atan2(norm(t), c);
}

struct PathCheck {
  double specular = 0.0;  // worst |angle_in - angle_out| in radians
  double mirror = 0.0;    // worst deviation of d_out from the mirrored d_in
  double unfolded = 0.0;  // worst relative length error
};

inline PathCheck check_path(const Scene& scene, const RayPath& p) {
  PathCheck out;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i) sum += distance(p.vertices[i], p.vertices[i + 1]);
  Vec3 image = p.vertices.front();
  for (std::size_t k = 0; k < p.interactions.size(); ++k) {
    const Vec3 n = outward_normal(scene, p.interactions[k]);
    const Vec3 din = unit(p.vertices[k + 1] - p.vertices[k]);
    const Vec3 dout = unit(p.vertices[k + 2] - p.vertices[k + 1]);
    out.specular = std::max(out.specular, std::abs(angle_to_normal(din, n) - angle_to_normal(dout, n)));
    const Vec3 reflected = din - 2.0 * dot(din, n) * n;
    out.mirror = std::max(out.mirror, norm(reflected - dout));
    const Vec3 q = plane_point(scene, p.interactions[k]);
    image = image - 2.0 * dot(image - q, n) * n;
  }
  const double unfolded = distance(image, p.vertices.back());
  out.unfolded = std::max({std::abs(unfolded - p.length) / p.length, std::abs(sum - p.length) / p.length});
  return out;
}

inline bool inside_any_building(const Scene& s, Vec3 p) {
  for (std::size_t i = 0; i < s.buildings().size(); ++i) {
    if (p.z <= s.building_top(i) + 0.5 &&
        classify_point(s.buildings()[i].footprint, p.xy()) != Containment::outside) {
      return true;
    }
  }
  return false;
}

}  // namespace plmodel::test
