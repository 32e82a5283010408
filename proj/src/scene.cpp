#include "plmodel/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"

namespace plmodel {

using nlohmann::json;

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

bool finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

Vec2 centroid(const Polygon& poly) {
  // Area-weighted centroid; falls back to the vertex mean for degenerate input.
  double a2 = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % poly.size()];
    const double c = cross(p, q);
    a2 += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  if (a2 == 0.0) {
    Vec2 m;
    for (Vec2 p : poly) m = m + p;
    return (1.0 / static_cast<double>(poly.size())) * m;
  }
  return {cx / (3.0 * a2), cy / (3.0 * a2)};
}

}  // namespace

double Material::conductivity_at(double f_ghz) const {
  if (conductivity_exponent == 0.0) return conductivity;
  return conductivity * std::pow(f_ghz, conductivity_exponent);
}

Material concrete_material() { return Material{"concrete", 5.31, 0.0326, 0.8095}; }

double GridTerrain::elevation_at(Vec2 p) const {
  const double fx = std::clamp((p.x - origin.x) / cell_size, 0.0, static_cast<double>(cols - 1));
  const double fy = std::clamp((p.y - origin.y) / cell_size, 0.0, static_cast<double>(rows - 1));
  const auto c0 = static_cast<std::size_t>(std::floor(fx));
  const auto r0 = static_cast<std::size_t>(std::floor(fy));
  const std::size_t c1 = std::min(c0 + 1, cols - 1);
  const std::size_t r1 = std::min(r0 + 1, rows - 1);
  const double tx = fx - static_cast<double>(c0);
  const double ty = fy - static_cast<double>(r0);
  auto at = [&](std::size_t r, std::size_t c) { return elevations[r * cols + c]; };
  const double south = (1.0 - tx) * at(r0, c0) + tx * at(r0, c1);
  const double north = (1.0 - tx) * at(r1, c0) + tx * at(r1, c1);
  return (1.0 - ty) * south + ty * north;
}

double Terrain::elevation_at(Vec2 p) const {
  if (const auto* flat = std::get_if<FlatTerrain>(&kind)) return flat->elevation;
  return std::get<GridTerrain>(kind).elevation_at(p);
}

Scene::Scene(GeoPoint anchor, Bounds bounds, std::vector<Material> materials,
             std::vector<Building> buildings, Terrain terrain)
    : anchor_(anchor),
      bounds_(bounds),
      materials_(std::move(materials)),
      buildings_(std::move(buildings)),
      terrain_(std::move(terrain)) {
  if (!(anchor_.lat_deg >= -90.0 && anchor_.lat_deg <= 90.0)) {
    throw ValidationError("anchor: latitude " + std::to_string(anchor_.lat_deg) +
                          " outside [-90, 90]");
  }
  if (!(anchor_.lon_deg >= -180.0 && anchor_.lon_deg <= 180.0)) {
    throw ValidationError("anchor: longitude " + std::to_string(anchor_.lon_deg) +
                          " outside [-180, 180]");
  }
  if (!(bounds_.min_x < bounds_.max_x && bounds_.min_y < bounds_.max_y)) {
    throw ValidationError("bounds: empty or inverted bounding box");
  }

  const bool has_concrete = std::any_of(materials_.begin(), materials_.end(),
                                        [](const Material& m) { return m.name == "concrete"; });
  if (!has_concrete) materials_.push_back(concrete_material());
  for (std::size_t i = 0; i < materials_.size(); ++i) {
    const Material& m = materials_[i];
    const std::string where = "materials[" + std::to_string(i) + "] '" + m.name + "'";
    if (m.name.empty()) throw ValidationError(where + ": empty name");
    if (!(m.rel_permittivity > 1.0) || !std::isfinite(m.rel_permittivity)) {
      throw ValidationError(where + ": rel_permittivity must be > 1");
    }
    if (!(m.conductivity >= 0.0) || !std::isfinite(m.conductivity) ||
        !std::isfinite(m.conductivity_exponent)) {
      throw ValidationError(where + ": conductivity must be >= 0");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (materials_[j].name == m.name) throw ValidationError(where + ": duplicate material name");
    }
  }

  auto resolve = [this](const std::string& name, const std::string& where) {
    const bool found = std::any_of(materials_.begin(), materials_.end(),
                                   [&](const Material& m) { return m.name == name; });
    if (!found) throw ValidationError(where + ": unknown material '" + name + "'");
  };

  resolve(terrain_.material, "terrain");
  if (const auto* flat = std::get_if<FlatTerrain>(&terrain_.kind)) {
    if (!std::isfinite(flat->elevation)) throw ValidationError("terrain: elevation not finite");
  } else {
    const auto& grid = std::get<GridTerrain>(terrain_.kind);
    if (!(grid.cell_size > 0.0)) throw ValidationError("terrain: cell_size must be > 0");
    if (grid.rows == 0 || grid.cols == 0 || grid.elevations.size() != grid.rows * grid.cols) {
      throw ValidationError("terrain: elevations size does not match rows x cols");
    }
    for (double e : grid.elevations) {
      if (!std::isfinite(e)) throw ValidationError("terrain: non-finite elevation");
    }
  }

  building_base_.reserve(buildings_.size());
  for (std::size_t i = 0; i < buildings_.size(); ++i) {
    Building& b = buildings_[i];
    const std::string where = "buildings[" + std::to_string(i) + "]";
    resolve(b.material, where);
    if (!(b.height > 0.0) || !std::isfinite(b.height)) {
      throw ValidationError(where + ": height must be > 0");
    }
    if (b.footprint.size() < 3) throw ValidationError(where + ": footprint needs >= 3 vertices");
    for (Vec2 p : b.footprint) {
      if (!finite(p)) throw ValidationError(where + ": non-finite footprint vertex");
      if (!bounds_.contains(p)) throw ValidationError(where + ": footprint leaves the scene bounds");
    }
    if (!is_simple(b.footprint)) throw ValidationError(where + ": footprint is not a simple polygon");
    if (signed_area(b.footprint) < 0.0) std::reverse(b.footprint.begin(), b.footprint.end());
    building_base_.push_back(terrain_.elevation_at(centroid(b.footprint)));
  }
}

std::size_t Scene::material_index(std::string_view name) const {
  for (std::size_t i = 0; i < materials_.size(); ++i) {
    if (materials_[i].name == name) return i;
  }
  throw ValidationError("unknown material '" + std::string(name) + "'");
}

const Material& Scene::material(std::string_view name) const {
  return materials_[material_index(name)];
}

// ---------------------------------------------------------------------------
// Scene file I/O

namespace {

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

Vec2 point_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json point_to_json(Vec2 p) { return json::array({p.x, p.y}); }

}  // namespace

Scene parse_scene(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("scene: top level must be an object");
  const int version = field<int>(doc, "version", "scene");
  if (version != 1) throw ParseError("scene: unsupported version " + std::to_string(version));

  const json& anchor_j = doc.contains("anchor") ? doc["anchor"] : json();
  GeoPoint anchor{field<double>(anchor_j, "lat", "anchor"), field<double>(anchor_j, "lon", "anchor")};

  const json& bounds_j = doc.contains("bounds") ? doc["bounds"] : json();
  Bounds bounds{field<double>(bounds_j, "min_x", "bounds"), field<double>(bounds_j, "min_y", "bounds"),
                field<double>(bounds_j, "max_x", "bounds"), field<double>(bounds_j, "max_y", "bounds")};

  std::vector<Material> materials;
  if (!doc.contains("materials") || !doc["materials"].is_array()) {
    throw ParseError("scene: missing array 'materials'");
  }
  for (std::size_t i = 0; i < doc["materials"].size(); ++i) {
    const json& m = doc["materials"][i];
    const std::string where = "materials[" + std::to_string(i) + "]";
    Material mat{field<std::string>(m, "name", where), field<double>(m, "rel_permittivity", where),
                 field<double>(m, "conductivity", where), 0.0};
    if (m.contains("conductivity_exponent")) {
      mat.conductivity_exponent = field<double>(m, "conductivity_exponent", where);
    }
    materials.push_back(std::move(mat));
  }

  if (!doc.contains("terrain")) throw ParseError("scene: missing field 'terrain'");
  const json& tj = doc["terrain"];
  Terrain terrain;
  terrain.material = field<std::string>(tj, "material", "terrain");
  const auto kind = field<std::string>(tj, "kind", "terrain");
  if (kind == "flat") {
    terrain.kind = FlatTerrain{field<double>(tj, "elevation", "terrain")};
  } else if (kind == "grid") {
    GridTerrain g;
    if (!tj.contains("origin")) throw ParseError("terrain: missing field 'origin'");
    g.origin = point_from_json(tj["origin"], "terrain.origin");
    g.cell_size = field<double>(tj, "cell_size", "terrain");
    g.rows = field<std::size_t>(tj, "rows", "terrain");
    g.cols = field<std::size_t>(tj, "cols", "terrain");
    g.elevations = field<std::vector<double>>(tj, "elevations", "terrain");
    terrain.kind = std::move(g);
  } else {
    throw ParseError("terrain: unknown kind '" + kind + "'");
  }

  std::vector<Building> buildings;
  if (!doc.contains("buildings") || !doc["buildings"].is_array()) {
    throw ParseError("scene: missing array 'buildings'");
  }
  for (std::size_t i = 0; i < doc["buildings"].size(); ++i) {
    const json& b = doc["buildings"][i];
    const std::string where = "buildings[" + std::to_string(i) + "]";
    Building out;
    out.height = field<double>(b, "height", where);
    out.material = field<std::string>(b, "material", where);
    if (!b.contains("footprint") || !b["footprint"].is_array()) {
      throw ParseError(where + ": missing array 'footprint'");
    }
    for (const json& p : b["footprint"]) out.footprint.push_back(point_from_json(p, where + ".footprint"));
    buildings.push_back(std::move(out));
  }

  return Scene(anchor, bounds, std::move(materials), std::move(buildings), std::move(terrain));
}

Scene load_scene(const std::filesystem::path& path) { return parse_scene(read_text_file(path)); }

std::string serialize_scene(const Scene& scene) {
  json doc;
  doc["version"] = 1;
  doc["anchor"] = {{"lat", scene.anchor().lat_deg}, {"lon", scene.anchor().lon_deg}};
  const Bounds& b = scene.bounds();
  doc["bounds"] = {{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y}};
  doc["materials"] = json::array();
  for (const Material& m : scene.materials()) {
    doc["materials"].push_back({{"name", m.name},
                                {"rel_permittivity", m.rel_permittivity},
                                {"conductivity", m.conductivity},
                                {"conductivity_exponent", m.conductivity_exponent}});
  }
  const Terrain& t = scene.terrain();
  if (const auto* flat = std::get_if<FlatTerrain>(&t.kind)) {
    doc["terrain"] = {{"kind", "flat"}, {"elevation", flat->elevation}, {"material", t.material}};
  } else {
    const auto& g = std::get<GridTerrain>(t.kind);
    doc["terrain"] = {{"kind", "grid"},         {"origin", point_to_json(g.origin)},
                      {"cell_size", g.cell_size}, {"rows", g.rows},
                      {"cols", g.cols},           {"elevations", g.elevations},
                      {"material", t.material}};
  }
  doc["buildings"] = json::array();
  for (const Building& bd : scene.buildings()) {
    json fp = json::array();
    for (Vec2 p : bd.footprint) fp.push_back(point_to_json(p));
    doc["buildings"].push_back({{"footprint", fp}, {"height", bd.height}, {"material", bd.material}});
  }
  return doc.dump(2) + "\n";
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_scene(scene));
}

// ---------------------------------------------------------------------------
// Synthetic generation

namespace {

struct Disc {
  Vec2 center;
  double radius;
};

Disc bounding_disc(const Polygon& poly) {
  const Vec2 c = centroid(poly);
  double r = 0.0;
  for (Vec2 p : poly) r = std::max(r, norm(p - c));
  return {c, r};
}

Polygon rectangle(Vec2 c, double w, double d, double angle) {
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  const Vec2 u{ca, sa};
  const Vec2 v{-sa, ca};
  const double hw = 0.5 * w;
  const double hd = 0.5 * d;
  return {c - hw * u - hd * v, c + hw * u - hd * v, c + hw * u + hd * v, c - hw * u + hd * v};
}

// L-shaped block: the w x d rectangle with its north-east quadrant removed.
Polygon l_shape(Vec2 c, double w, double d, double angle) {
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  const Vec2 u{ca, sa};
  const Vec2 v{-sa, ca};
  const double hw = 0.5 * w;
  const double hd = 0.5 * d;
  auto at = [&](double s, double t) { return c + s * u + t * v; };
  return {at(-hw, -hd), at(hw, -hd), at(hw, 0.0), at(0.0, 0.0), at(0.0, hd), at(-hw, hd)};
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneGenSpec& spec) {
  if (spec.buildings < 0) throw ValidationError("generate: negative building count");
  if (!(spec.bounds.width() > 0.0 && spec.bounds.height() > 0.0)) {
    throw ValidationError("generate: region has no area");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<Building> buildings = spec.reserved;
  std::vector<Disc> discs;
  for (const Building& b : buildings) discs.push_back(bounding_disc(b.footprint));

  const int n_campus =
      static_cast<int>(std::lround(spec.campus_fraction * static_cast<double>(spec.buildings)));
  for (int i = 0; i < spec.buildings; ++i) {
    const bool campus = i < n_campus;
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts_per_building && !placed; ++attempt) {
      const double w = campus ? uniform(spec.campus_size_min, spec.campus_size_max)
                              : uniform(spec.house_size_min, spec.house_size_max);
      const double d = campus ? uniform(spec.campus_size_min, spec.campus_size_max)
                              : uniform(spec.house_size_min, spec.house_size_max);
      const double angle = uniform(0.0, 0.5 * std::numbers::pi);
      const bool l_block = campus && unit(rng) < 0.5;
      const double h = campus ? uniform(spec.campus_height_min, spec.campus_height_max)
                              : uniform(spec.house_height_min, spec.house_height_max);
      const double r = 0.5 * std::hypot(w, d);
      const Bounds& bb = spec.bounds;
      if (bb.width() <= 2.0 * r || bb.height() <= 2.0 * r) continue;
      const Vec2 c{uniform(bb.min_x + r, bb.max_x - r), uniform(bb.min_y + r, bb.max_y - r)};

      Polygon fp = l_block ? l_shape(c, w, d, angle) : rectangle(c, w, d, angle);
      const Disc disc = bounding_disc(fp);
      const bool clear = std::all_of(discs.begin(), discs.end(), [&](const Disc& o) {
        return norm(o.center - disc.center) >= o.radius + disc.radius + spec.min_gap;
      });
      if (!clear) continue;
      discs.push_back(disc);
      buildings.push_back(Building{std::move(fp), h, "concrete"});
      placed = true;
    }
    if (!placed) {
      throw ValidationError("generate: could not place building " + std::to_string(i) +
                            " without overlap after " +
                            std::to_string(spec.max_attempts_per_building) + " attempts");
    }
  }

  return Scene(spec.anchor, spec.bounds, {concrete_material()}, std::move(buildings),
               Terrain{FlatTerrain{0.0}, "concrete"});
}

// ---------------------------------------------------------------------------
// Geodetic conversion

GeoPoint geodetic_from_local(GeoPoint anchor, Vec2 p) {
  if (!(norm(p) <= kGeodeticValidityM)) {
    throw DomainError("geodetic_from_local: point is more than 100 km from the anchor");
  }
  const double lat0 = anchor.lat_deg / kDegPerRad;
  return {anchor.lat_deg + (p.y / kEarthRadiusM) * kDegPerRad,
          anchor.lon_deg + (p.x / (kEarthRadiusM * std::cos(lat0))) * kDegPerRad};
}

Vec2 local_from_geodetic(GeoPoint anchor, GeoPoint g) {
  const double lat0 = anchor.lat_deg / kDegPerRad;
  const Vec2 p{(g.lon_deg - anchor.lon_deg) / kDegPerRad * kEarthRadiusM * std::cos(lat0),
               (g.lat_deg - anchor.lat_deg) / kDegPerRad * kEarthRadiusM};
  if (!(norm(p) <= kGeodeticValidityM)) {
    throw DomainError("local_from_geodetic: point is more than 100 km from the anchor");
  }
  return p;
}

GeoPoint geodetic_from_local(const Scene& scene, Vec2 p) {
  return geodetic_from_local(scene.anchor(), p);
}

Vec2 local_from_geodetic(const Scene& scene, GeoPoint g) {
  return local_from_geodetic(scene.anchor(), g);
}

// ---------------------------------------------------------------------------

double TransmitterSite::power_dbm() const { return 10.0 * std::log10(1000.0 * power_w); }

void TransmitterSite::validate() const {
  if (!(height_agl > 0.0)) throw ValidationError("site '" + name + "': height_agl must be > 0");
  if (!(power_w > 0.0)) throw ValidationError("site '" + name + "': power_w must be > 0");
}

std::size_t ReceiverGrid::cols() const {
  return static_cast<std::size_t>(std::floor(extent.width() / spacing + 1e-9));
}

std::size_t ReceiverGrid::rows() const {
  return static_cast<std::size_t>(std::floor(extent.height() / spacing + 1e-9));
}

Vec2 ReceiverGrid::cell_center(std::size_t row, std::size_t col) const {
  return {extent.min_x + (static_cast<double>(col) + 0.5) * spacing,
          extent.min_y + (static_cast<double>(row) + 0.5) * spacing};
}

void ReceiverGrid::validate() const {
  if (!(spacing > 0.0)) throw ValidationError("grid: spacing must be > 0");
  if (!(rx_height > 0.0)) throw ValidationError("grid: rx_height must be > 0");
  if (!(max_distance > 0.0)) throw ValidationError("grid: max_distance must be > 0");
  if (!(extent.width() > 0.0 && extent.height() > 0.0)) throw ValidationError("grid: empty extent");
}

}  // namespace plmodel
