#include "plmodel/geometry.hpp"

#include <algorithm>

namespace plmodel {

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

double signed_area(const Polygon& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * twice;
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

bool is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  if (signed_area(poly) == 0.0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (poly[i] == poly[(i + 1) % n]) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 c = poly[j];
      const Vec2 d = poly[(j + 1) % n];
      const bool adjacent_after = (j == i + 1);
      const bool adjacent_before = (i == 0 && j == n - 1);
      if (adjacent_after) {
        // Share b == c; the far endpoints must not fold back onto the other edge.
        if (orientation(a, b, d) == 0 && on_segment(a, b, d)) return false;
        if (orientation(c, d, a) == 0 && on_segment(c, d, a)) return false;
        continue;
      }
      if (adjacent_before) {
        // Share a == d.
        if (orientation(a, b, c) == 0 && on_segment(a, b, c)) return false;
        if (orientation(c, d, b) == 0 && on_segment(c, d, b)) return false;
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

Containment classify_point(const Polygon& poly, Vec2 p) {
  const std::size_t n = poly.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j];
    const Vec2 b = poly[i];
    if (orientation(a, b, p) == 0 && on_segment(a, b, p)) return Containment::boundary;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside ? Containment::inside : Containment::outside;
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2 p0 = a[i];
    const Vec2 p1 = a[(i + 1) % a.size()];
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (segments_intersect(p0, p1, b[j], b[(j + 1) % b.size()])) return true;
    }
  }
  return classify_point(b, a.front()) != Containment::outside ||
         classify_point(a, b.front()) != Containment::outside;
}

std::vector<Interval> segment_polygon_intervals(const Polygon& poly, Vec2 a, Vec2 b) {
  std::vector<Interval> out;
  const Vec2 r = b - a;
  const double rr = dot(r, r);
  if (rr == 0.0) {
    if (classify_point(poly, a) != Containment::outside) out.push_back({0.0, 1.0});
    return out;
  }

  std::vector<double> ts{0.0, 1.0};
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 c = poly[i];
    const Vec2 d = poly[(i + 1) % n];
    const Vec2 s = d - c;
    const double denom = cross(r, s);
    const Vec2 ca = c - a;
    if (denom != 0.0) {
      const double t = cross(ca, s) / denom;
      const double u = cross(ca, r) / denom;
      if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) ts.push_back(t);
    } else if (cross(ca, r) == 0.0) {
      for (Vec2 q : {c, d}) {
        const double t = dot(q - a, r) / rr;
        if (t >= 0.0 && t <= 1.0) ts.push_back(t);
      }
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  auto push = [&out](double lo, double hi) {
    if (!out.empty() && out.back().hi >= lo) {
      out.back().hi = std::max(out.back().hi, hi);
    } else {
      out.push_back({lo, hi});
    }
  };
  auto at = [&](double t) { return Vec2{a.x + t * r.x, a.y + t * r.y}; };
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (classify_point(poly, at(ts[i])) != Containment::outside) push(ts[i], ts[i]);
    if (i + 1 < ts.size()) {
      const double mid = 0.5 * (ts[i] + ts[i + 1]);
      if (classify_point(poly, at(mid)) != Containment::outside) push(ts[i], ts[i + 1]);
    }
  }
  return out;
}

}  // namespace plmodel
