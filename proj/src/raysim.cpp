#include "plmodel/raysim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "plmodel/error.hpp"

namespace plmodel {

namespace {

constexpr double kFrontEps = 1e-9;
// Segments that start or end on a reflecting surface ignore contact within
// this fraction of their length from the endpoints.
constexpr double kEndpointMargin = 1e-9;

// Parameter range of a + t (b - a), t in [lo, hi], where z stays in [z_lo, z_hi].
bool z_range(double za, double zb, double z_lo, double z_hi, double& lo, double& hi) {
  if (za == zb) return za >= z_lo && za <= z_hi;
  double t1 = (z_lo - za) / (zb - za);
  double t2 = (z_hi - za) / (zb - za);
  if (t1 > t2) std::swap(t1, t2);
  lo = std::max(lo, t1);
  hi = std::min(hi, t2);
  return lo <= hi;
}

bool terrain_blocks(const Scene& scene, Vec3 a, Vec3 b, double margin) {
  const Terrain& terrain = scene.terrain();
  auto z_at = [&](double t) { return a.z + t * (b.z - a.z); };
  if (const auto* flat = std::get_if<FlatTerrain>(&terrain.kind)) {
    return z_at(margin) <= flat->elevation || z_at(1.0 - margin) <= flat->elevation;
  }
  const auto& grid = std::get<GridTerrain>(terrain.kind);
  const double len_xy = norm(b.xy() - a.xy());
  const auto steps = static_cast<std::size_t>(std::ceil(len_xy / (0.25 * grid.cell_size))) + 1;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = margin + (1.0 - 2.0 * margin) * static_cast<double>(i) / static_cast<double>(steps);
    const Vec2 p = a.xy() + t * (b.xy() - a.xy());
    if (z_at(t) <= grid.elevation_at(p)) return true;
  }
  return false;
}

bool building_blocks(const Scene& scene, std::size_t i, Vec3 a, Vec3 b, double margin) {
  const Building& bd = scene.buildings()[i];
  double lo = margin;
  double hi = 1.0 - margin;
  if (!z_range(a.z, b.z, scene.building_base(i), scene.building_top(i), lo, hi)) return false;

  double min_x = bd.footprint[0].x, max_x = min_x, min_y = bd.footprint[0].y, max_y = min_y;
  for (Vec2 p : bd.footprint) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const Vec2 pa = a.xy() + lo * (b.xy() - a.xy());
  const Vec2 pb = a.xy() + hi * (b.xy() - a.xy());
  if (std::max(pa.x, pb.x) < min_x || std::min(pa.x, pb.x) > max_x ||
      std::max(pa.y, pb.y) < min_y || std::min(pa.y, pb.y) > max_y) {
    return false;
  }
  for (const Interval& iv : segment_polygon_intervals(bd.footprint, a.xy(), b.xy())) {
    if (iv.lo <= hi && iv.hi >= lo) return true;
  }
  return false;
}

bool segment_blocked(const Scene& scene, Vec3 a, Vec3 b, double margin) {
  if (terrain_blocks(scene, a, b, margin)) return true;
  for (std::size_t i = 0; i < scene.buildings().size(); ++i) {
    if (building_blocks(scene, i, a, b, margin)) return true;
  }
  return false;
}

Vec3 face_normal(const Interaction& it, const Scene& scene) {
  if (it.surface == SurfaceKind::ground) return {0.0, 0.0, 1.0};
  const Polygon& fp = scene.buildings()[static_cast<std::size_t>(it.building)].footprint;
  const Vec2 a = fp[static_cast<std::size_t>(it.edge)];
  const Vec2 b = fp[(static_cast<std::size_t>(it.edge) + 1) % fp.size()];
  const Vec2 d = b - a;
  const double len = norm(d);
  return {d.y / len, -d.x / len, 0.0};
}

}  // namespace

void SimConfig::validate() const {
  if (max_reflections < 0) throw ValidationError("sim: max_reflections must be >= 0");
  if (max_reflections > reflection_limit) {
    throw ValidationError("sim: max_reflections " + std::to_string(max_reflections) +
                          " exceeds the configured limit " + std::to_string(reflection_limit));
  }
  if (max_wall_reflections < 0) throw ValidationError("sim: max_wall_reflections must be >= 0");
  if (!(frequency_ghz >= 0.1 && frequency_ghz <= 100.0)) {
    throw ValidationError("sim: frequency must lie in [0.1, 100] GHz");
  }
  if (!(max_distance_m > 0.0)) throw ValidationError("sim: max_distance_m must be > 0");
}

bool los_blocked(const Scene& scene, Vec3 a, Vec3 b) { return segment_blocked(scene, a, b, 0.0); }

std::complex<double> fresnel_reflection(const Material& material, double frequency_ghz,
                                        double angle, Polarization polarization) {
  if (!(angle >= 0.0 && angle <= 0.5 * std::numbers::pi)) {
    throw DomainError("fresnel_reflection: incidence angle outside [0, pi/2]");
  }
  if (!(frequency_ghz > 0.0)) throw DomainError("fresnel_reflection: frequency must be > 0");
  const double omega_eps0 = 2.0 * std::numbers::pi * frequency_ghz * 1e9 * kVacuumPermittivity;
  const std::complex<double> eps(material.rel_permittivity,
                                 -material.conductivity_at(frequency_ghz) / omega_eps0);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const std::complex<double> root = std::sqrt(eps - s * s);
  switch (polarization) {
    case Polarization::perpendicular:
      return (c - root) / (c + root);
    case Polarization::parallel:
      return (eps * c - root) / (eps * c + root);
    case Polarization::surface_dependent:
      break;
  }
  throw DomainError("fresnel_reflection: polarization must be perpendicular or parallel");
}

// ---------------------------------------------------------------------------
// PathTracer

PathTracer::PathTracer(const Scene& scene, Vec3 tx, const SimConfig& cfg)
    : scene_(&scene), cfg_(cfg), tx_(tx) {
  cfg_.validate();
  if (scene.terrain().is_flat()) {
    ground_z_ = std::get<FlatTerrain>(scene.terrain().kind).elevation;
  }
  for (std::size_t bi = 0; bi < scene.buildings().size(); ++bi) {
    const Polygon& fp = scene.buildings()[bi].footprint;
    for (std::size_t e = 0; e < fp.size(); ++e) {
      const Vec2 a = fp[e];
      const Vec2 b = fp[(e + 1) % fp.size()];
      const Vec2 d = b - a;
      const double len = norm(d);
      faces_.push_back(Face{SurfaceKind::wall, static_cast<int>(bi), static_cast<int>(e), a, b,
                            {d.y / len, -d.x / len}, scene.building_base(bi),
                            scene.building_top(bi)});
    }
  }
  // Ground reflections are modelled for flat terrain only.
  if (scene.terrain().is_flat()) {
    faces_.push_back(Face{SurfaceKind::ground, -1, -1, {}, {}, {}, ground_z_, ground_z_});
  }

  const int max_order = cfg_.max_reflections;
  if (max_order == 0) return;
  const auto face_count = static_cast<int>(faces_.size());
  for (int f = 0; f < face_count; ++f) {
    const Face& face = faces_[static_cast<std::size_t>(f)];
    if (face.kind == SurfaceKind::wall && cfg_.max_wall_reflections == 0) continue;
    if (signed_distance(face, tx_) <= kFrontEps) continue;
    if (distance_to_face(face, tx_) > cfg_.max_distance_m) continue;
    const bool wall = face.kind == SurfaceKind::wall;
    nodes_.push_back(ImageNode{f, -1, wall ? f : -1, wall ? 1 : 0, 1, mirror(face, tx_)});
  }
  // Breadth-first expansion keeps node order deterministic by depth.
  std::size_t level_begin = 0;
  for (int depth = 1; depth < max_order; ++depth) {
    const std::size_t level_end = nodes_.size();
    for (std::size_t n = level_begin; n < level_end; ++n) {
      const ImageNode node = nodes_[n];
      for (int f = 0; f < face_count; ++f) {
        if (f == node.face) continue;
        const Face& face = faces_[static_cast<std::size_t>(f)];
        const bool wall = face.kind == SurfaceKind::wall;
        if (wall && node.walls >= cfg_.max_wall_reflections) continue;
        if (signed_distance(face, node.image) <= kFrontEps) continue;
        if (distance_to_face(face, node.image) > cfg_.max_distance_m) continue;
        if (wall && !child_in_beam(node, face)) continue;
        nodes_.push_back(ImageNode{f, static_cast<int>(n), wall ? f : node.last_wall,
                                   node.walls + (wall ? 1 : 0), depth + 1, mirror(face, node.image)});
      }
    }
    level_begin = level_end;
  }
}

double PathTracer::signed_distance(const Face& f, Vec3 p) const {
  if (f.kind == SurfaceKind::ground) return p.z - f.z_lo;
  return dot(p.xy() - f.a, f.normal);
}

Vec3 PathTracer::mirror(const Face& f, Vec3 p) const {
  if (f.kind == SurfaceKind::ground) return {p.x, p.y, 2.0 * f.z_lo - p.z};
  const double sd = dot(p.xy() - f.a, f.normal);
  return {p.x - 2.0 * sd * f.normal.x, p.y - 2.0 * sd * f.normal.y, p.z};
}

double PathTracer::distance_to_face(const Face& f, Vec3 p) const {
  if (f.kind == SurfaceKind::ground) return std::abs(p.z - f.z_lo);
  const Vec2 d = f.b - f.a;
  const double u = std::clamp(dot(p.xy() - f.a, d) / dot(d, d), 0.0, 1.0);
  const double dxy = norm(p.xy() - (f.a + u * d));
  const double dz = std::max({0.0, f.z_lo - p.z, p.z - f.z_hi});
  return std::hypot(dxy, dz);
}

bool PathTracer::child_in_beam(const ImageNode& node, const Face& child) const {
  if (node.last_wall < 0) return true;
  const Face& lw = faces_[static_cast<std::size_t>(node.last_wall)];
  const Vec2 s = node.image.xy();
  const Vec2 sa = lw.a - s;
  const Vec2 sb = lw.b - s;
  const double orient = cross(sa, sb) > 0.0 ? 1.0 : -1.0;
  const double la = norm(sa);
  const double lb = norm(sb);
  // Each constraint is a signed distance in metres; clip the child segment.
  auto front = [&](Vec2 x) { return dot(x - lw.a, lw.normal); };
  auto side_a = [&](Vec2 x) { return orient * cross(sa, x - s) / la; };
  auto side_b = [&](Vec2 x) { return orient * cross(x - s, sb) / lb; };
  constexpr double kTol = 1e-6;
  double lo = 0.0;
  double hi = 1.0;
  auto clip = [&](double f0, double f1) {
    f0 += kTol;
    f1 += kTol;
    if (f0 < 0.0 && f1 < 0.0) return false;
    if (f0 < 0.0) lo = std::max(lo, f0 / (f0 - f1));
    if (f1 < 0.0) hi = std::min(hi, f0 / (f0 - f1));
    return lo <= hi;
  };
  return clip(front(child.a), front(child.b)) && clip(side_a(child.a), side_a(child.b)) &&
         clip(side_b(child.a), side_b(child.b));
}

std::vector<RayPath> PathTracer::trace(Vec3 rx) const {
  std::vector<RayPath> paths;
  const double max_d2 = cfg_.max_distance_m * cfg_.max_distance_m;

  const Vec3 direct = rx - tx_;
  if (dot(direct, direct) <= max_d2 && !segment_blocked(*scene_, tx_, rx, 0.0)) {
    paths.push_back(RayPath{PathKind::direct, 0, {tx_, rx}, norm(direct), {}, {}});
  }

  std::vector<Vec3> points;
  std::vector<int> face_seq;
  for (const ImageNode& leaf : nodes_) {
    const Vec3 to_image = leaf.image - rx;
    if (dot(to_image, to_image) > max_d2) continue;

    points.clear();
    face_seq.clear();
    Vec3 target = rx;
    const ImageNode* cur = &leaf;
    bool valid = true;
    while (true) {
      const Face& face = faces_[static_cast<std::size_t>(cur->face)];
      const double sd_target = signed_distance(face, target);
      if (sd_target <= kFrontEps) {
        valid = false;
        break;
      }
      const double sd_image = signed_distance(face, cur->image);
      const double t = sd_target / (sd_target - sd_image);
      Vec3 p = target + t * (cur->image - target);
      if (face.kind == SurfaceKind::ground) {
        p.z = face.z_lo;
      } else {
        const Vec2 d = face.b - face.a;
        const double u = dot(p.xy() - face.a, d) / dot(d, d);
        if (u < 0.0 || u > 1.0 || p.z < face.z_lo || p.z > face.z_hi) {
          valid = false;
          break;
        }
      }
      points.push_back(p);
      face_seq.push_back(cur->face);
      target = p;
      if (cur->parent < 0) break;
      cur = &nodes_[static_cast<std::size_t>(cur->parent)];
    }
    if (!valid) continue;

    RayPath path;
    path.kind = PathKind::reflected;
    path.order = static_cast<int>(points.size());
    path.vertices.reserve(points.size() + 2);
    path.vertices.push_back(tx_);
    for (auto it = points.rbegin(); it != points.rend(); ++it) path.vertices.push_back(*it);
    path.vertices.push_back(rx);

    for (std::size_t s = 0; s + 1 < path.vertices.size() && valid; ++s) {
      if (segment_blocked(*scene_, path.vertices[s], path.vertices[s + 1], kEndpointMargin)) {
        valid = false;
      }
    }
    if (!valid) continue;

    for (std::size_t s = 0; s + 1 < path.vertices.size(); ++s) {
      path.length += distance(path.vertices[s], path.vertices[s + 1]);
    }
    for (auto it = face_seq.rbegin(); it != face_seq.rend(); ++it) {
      const Face& face = faces_[static_cast<std::size_t>(*it)];
      path.interactions.push_back(Interaction{face.kind, face.building, face.edge, 0.0});
    }
    for (std::size_t k = 0; k < path.interactions.size(); ++k) {
      const Vec3 in = path.vertices[k + 1] - path.vertices[k];
      const Vec3 n = face_normal(path.interactions[k], *scene_);
      const double c = std::min(1.0, std::abs(dot(in, n)) / norm(in));
      path.interactions[k].incidence_angle = std::acos(c);
    }

    const bool duplicate = std::any_of(paths.begin(), paths.end(), [&](const RayPath& other) {
      if (other.vertices.size() != path.vertices.size()) return false;
      for (std::size_t v = 0; v < path.vertices.size(); ++v) {
        if (distance(other.vertices[v], path.vertices[v]) > 1e-9) return false;
      }
      return true;
    });
    if (!duplicate) paths.push_back(std::move(path));
  }

  auto face_key = [](const RayPath& p) {
    std::vector<std::pair<int, int>> key;
    for (const Interaction& it : p.interactions) key.emplace_back(it.building, it.edge);
    return key;
  };
  std::stable_sort(paths.begin(), paths.end(), [&](const RayPath& a, const RayPath& b) {
    if (a.kind != b.kind) return a.kind == PathKind::direct;
    if (a.length != b.length) return a.length < b.length;
    return face_key(a) < face_key(b);
  });
  assign_reflection_coeffs(paths, *scene_, cfg_);
  return paths;
}

std::vector<RayPath> trace_paths(const Scene& scene, Vec3 tx, Vec3 rx, const SimConfig& cfg) {
  return PathTracer(scene, tx, cfg).trace(rx);
}

void assign_reflection_coeffs(std::vector<RayPath>& paths, const Scene& scene,
                              const SimConfig& cfg) {
  const Material& ground = scene.material(scene.terrain().material);
  for (RayPath& path : paths) {
    path.reflection_coeffs.clear();
    for (const Interaction& it : path.interactions) {
      const bool is_ground = it.surface == SurfaceKind::ground;
      const Material& mat =
          is_ground ? ground
                    : scene.material(scene.buildings()[static_cast<std::size_t>(it.building)].material);
      Polarization pol = cfg.polarization;
      if (pol == Polarization::surface_dependent) {
        pol = is_ground ? Polarization::parallel : Polarization::perpendicular;
      }
      path.reflection_coeffs.push_back(
          fresnel_reflection(mat, cfg.frequency_ghz, it.incidence_angle, pol));
    }
  }
}

std::optional<double> field_gain_db(std::span<const RayPath> paths, const SimConfig& cfg) {
  if (paths.empty()) return std::nullopt;
  const double lambda = cfg.wavelength_m();
  const double k = 2.0 * std::numbers::pi / lambda;
  std::complex<double> sum{0.0, 0.0};
  double magnitude_sum = 0.0;
  for (const RayPath& p : paths) {
    std::complex<double> a = lambda / (4.0 * std::numbers::pi * p.length);
    for (const auto& g : p.reflection_coeffs) a *= g;
    a *= std::polar(1.0, -k * p.length);
    sum += a;
    magnitude_sum += std::abs(a);
  }
  const double mag = std::abs(sum);
  // A residual at rounding level of the individual terms is a complete null.
  if (!(mag > 1e-12 * magnitude_sum)) return std::nullopt;
  return 20.0 * std::log10(mag);
}

std::optional<double> received_power(std::span<const RayPath> paths, const SimConfig& cfg,
                                     double p_tx_dbm, double g_tx_dbi, double g_rx_dbi) {
  const auto gain = field_gain_db(paths, cfg);
  if (!gain) return std::nullopt;
  return p_tx_dbm + g_tx_dbi + g_rx_dbi + *gain;
}

double path_loss(double p_tx_dbm, double g_tx_dbi, double g_rx_dbi, double p_rx_dbm) {
  return p_tx_dbm + g_tx_dbi + g_rx_dbi - p_rx_dbm;
}

}  // namespace plmodel
