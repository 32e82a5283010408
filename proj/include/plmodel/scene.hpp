#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "plmodel/geometry.hpp"

namespace plmodel {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kGeodeticValidityM = 100000.0;

/// Dielectric half-space parameters. Conductivity follows
/// `conductivity * f_GHz^conductivity_exponent`, so a zero exponent is a
/// frequency-independent conductivity.
struct Material {
  std::string name;
  double rel_permittivity = 1.0;
  double conductivity = 0.0;
  double conductivity_exponent = 0.0;

  double conductivity_at(double f_ghz) const;
};

/// Shipped default for "concrete": relative permittivity 5.31 and
/// conductivity 0.0326 f^0.8095 S/m.
Material concrete_material();

struct Building {
  Polygon footprint;  // local metres, CCW after validation
  double height = 0.0;
  std::string material;
};

struct FlatTerrain {
  double elevation = 0.0;
};

/// Regular elevation grid; elevations are row-major with row 0 at `origin.y`.
struct GridTerrain {
  Vec2 origin;
  double cell_size = 1.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> elevations;

  // Bilinear; clamped to the grid edge outside the covered area.
  double elevation_at(Vec2 p) const;
};

struct Terrain {
  std::variant<FlatTerrain, GridTerrain> kind = FlatTerrain{};
  std::string material = "concrete";

  bool is_flat() const { return std::holds_alternative<FlatTerrain>(kind); }
  double elevation_at(Vec2 p) const;
};

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

/// Immutable propagation environment. The constructor is the single validation
/// path for loaded and generated scenes; it throws ValidationError naming the
/// offending element and normalizes every footprint to CCW winding.
class Scene {
 public:
  Scene(GeoPoint anchor, Bounds bounds, std::vector<Material> materials,
        std::vector<Building> buildings, Terrain terrain);

  const GeoPoint& anchor() const { return anchor_; }
  const Bounds& bounds() const { return bounds_; }
  const std::vector<Material>& materials() const { return materials_; }
  const std::vector<Building>& buildings() const { return buildings_; }
  const Terrain& terrain() const { return terrain_; }

  const Material& material(std::string_view name) const;
  std::size_t material_index(std::string_view name) const;

  double ground_elevation(Vec2 p) const { return terrain_.elevation_at(p); }
  // Buildings stand on the terrain elevation sampled at their footprint centroid.
  double building_base(std::size_t i) const { return building_base_[i]; }
  double building_top(std::size_t i) const { return building_base_[i] + buildings_[i].height; }

 private:
  GeoPoint anchor_;
  Bounds bounds_;
  std::vector<Material> materials_;
  std::vector<Building> buildings_;
  Terrain terrain_;
  std::vector<double> building_base_;
};

Scene parse_scene(std::string_view json_text);
Scene load_scene(const std::filesystem::path& path);
// Canonical form: sorted keys, two-space indent, shortest round-trip numbers.
std::string serialize_scene(const Scene& scene);
void save_scene(const Scene& scene, const std::filesystem::path& path);

/// Parameters for the synthetic suburban generator. The region is
/// `bounds`; a fraction of the buildings are large campus blocks, the rest
/// small one- or two-storey houses. `reserved` footprints are placed first
/// (e.g. transmitter rooftops) and count toward nothing else.
struct SceneGenSpec {
  Bounds bounds{-550.0, -550.0, 550.0, 550.0};
  GeoPoint anchor{22.311359, 39.102723};
  int buildings = 50;
  double campus_fraction = 0.15;
  double house_size_min = 10.0;
  double house_size_max = 22.0;
  double house_height_min = 4.0;
  double house_height_max = 8.0;
  double campus_size_min = 30.0;
  double campus_size_max = 60.0;
  double campus_height_min = 12.0;
  double campus_height_max = 24.0;
  double min_gap = 4.0;
  int max_attempts_per_building = 500;
  std::vector<Building> reserved;
};

/// Deterministic in (seed, spec). Throws ValidationError when the requested
/// count cannot be placed without overlap within the retry budget.
Scene generate_scene(std::uint64_t seed, const SceneGenSpec& spec);

// Equirectangular projection about the scene anchor on a sphere of radius
// kEarthRadiusM. Both throw DomainError beyond kGeodeticValidityM.
GeoPoint geodetic_from_local(const Scene& scene, Vec2 p);
Vec2 local_from_geodetic(const Scene& scene, GeoPoint g);
GeoPoint geodetic_from_local(GeoPoint anchor, Vec2 p);
Vec2 local_from_geodetic(GeoPoint anchor, GeoPoint g);

struct TransmitterSite {
  std::string name;
  Vec2 position;
  double height_agl = 12.0;
  double power_w = 5.0;
  double gain_dbi = 0.0;

  double power_dbm() const;
  void validate() const;
};

/// Receiver cells are the centres of `spacing`-sized squares tiling `extent`
/// from its minimum corner; row 0 is the southernmost row.
struct ReceiverGrid {
  Bounds extent;
  double spacing = 15.0;
  double rx_height = 1.5;
  double rx_gain_dbi = 2.1;
  double max_distance = 1500.0;

  std::size_t cols() const;
  std::size_t rows() const;
  std::size_t size() const { return rows() * cols(); }
  Vec2 cell_center(std::size_t row, std::size_t col) const;
  void validate() const;
};

}  // namespace plmodel
