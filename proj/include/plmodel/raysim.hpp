#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "plmodel/geometry.hpp"
#include "plmodel/scene.hpp"

namespace plmodel {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;

enum class Polarization { perpendicular, parallel, surface_dependent };

struct SimConfig {
  int max_reflections = 4;       // total interactions, ground included
  int max_wall_reflections = 4;  // subset of the above that may hit walls
  int reflection_limit = 4;      // raise to allow deeper enumeration
  double frequency_ghz = 2.3;
  double max_distance_m = 1500.0;
  Polarization polarization = Polarization::surface_dependent;

  double wavelength_m() const { return kSpeedOfLight / (frequency_ghz * 1e9); }
  void validate() const;
};

enum class SurfaceKind { wall, ground };

struct Interaction {
  SurfaceKind surface = SurfaceKind::ground;
  int building = -1;  // wall only
  int edge = -1;      // wall only: footprint edge from vertex `edge` to `edge + 1`
  double incidence_angle = 0.0;  // radians from the surface normal

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

enum class PathKind { direct, reflected };

struct RayPath {
  PathKind kind = PathKind::direct;
  int order = 0;
  std::vector<Vec3> vertices;  // tx, interaction points..., rx
  double length = 0.0;
  std::vector<Interaction> interactions;
  std::vector<std::complex<double>> reflection_coeffs;  // one per interaction
};

/// True iff the closed segment a-b meets any extruded building volume or
/// touches/passes below the terrain surface.
bool los_blocked(const Scene& scene, Vec3 a, Vec3 b);

/// Fresnel coefficient of a lossy dielectric half-space with complex
/// permittivity eps_r - j sigma / (2 pi f eps0). `angle` is measured from the
/// surface normal. Perpendicular (TE) and parallel (TM) follow the
/// ITU-R P.2040 sign convention; surface_dependent is rejected here.
std::complex<double> fresnel_reflection(const Material& material, double frequency_ghz,
                                        double angle, Polarization polarization);

/// Image-method tracer for one transmitter position. Construction builds the
/// image tree (depends on tx and scene only); trace() is const and may be
/// called concurrently for different receivers.
class PathTracer {
 public:
  PathTracer(const Scene& scene, Vec3 tx, const SimConfig& cfg);

  // Geometry plus reflection coefficients at cfg.frequency_ghz.
  std::vector<RayPath> trace(Vec3 rx) const;
  std::size_t image_count() const { return nodes_.size(); }

 private:
  struct Face {
    SurfaceKind kind;
    int building;
    int edge;
    Vec2 a;
    Vec2 b;
    Vec2 normal;  // outward, walls only
    double z_lo;
    double z_hi;
  };
  struct ImageNode {
    int face;
    int parent;
    int last_wall;  // face index of the most recent wall, -1 if none
    int walls;
    int depth;
    Vec3 image;
  };

  double signed_distance(const Face& f, Vec3 p) const;
  Vec3 mirror(const Face& f, Vec3 p) const;
  double distance_to_face(const Face& f, Vec3 p) const;
  bool child_in_beam(const ImageNode& node, const Face& child) const;

  const Scene* scene_;
  SimConfig cfg_;
  Vec3 tx_;
  double ground_z_ = 0.0;
  std::vector<Face> faces_;
  std::vector<ImageNode> nodes_;
};

std::vector<RayPath> trace_paths(const Scene& scene, Vec3 tx, Vec3 rx, const SimConfig& cfg);

// Recomputes each interaction's coefficient for cfg's frequency and polarization.
void assign_reflection_coeffs(std::vector<RayPath>& paths, const Scene& scene,
                              const SimConfig& cfg);

/// Coherent field sum of the paths relative to an isotropic source,
/// 20 log10 |sum_i (lambda / 4 pi L_i) prod Gamma exp(-j 2 pi L_i / lambda)|.
/// nullopt for no paths or a complete null.
std::optional<double> field_gain_db(std::span<const RayPath> paths, const SimConfig& cfg);

std::optional<double> received_power(std::span<const RayPath> paths, const SimConfig& cfg,
                                     double p_tx_dbm, double g_tx_dbi, double g_rx_dbi);

// PL = P_tx + G_tx + G_rx - P_rx.
double path_loss(double p_tx_dbm, double g_tx_dbi, double g_rx_dbi, double p_rx_dbm);

struct PropagationResult {
  Vec3 rx_position;
  double distance_3d = 0.0;
  bool los = false;
  std::vector<RayPath> paths;
  std::optional<double> p_rx_dbm;
  std::optional<double> path_loss_db;
};

/// Frequency-independent part of a coverage run: per-cell paths without
/// coefficients. Lets a sweep reuse one trace across frequencies and powers.
struct CoverageGeometry {
  ReceiverGrid grid;
  Vec3 tx;
  struct Cell {
    Vec3 rx;
    double distance_3d = 0.0;
    bool los = false;
    std::vector<RayPath> paths;
  };
  std::vector<Cell> cells;  // row-major
};

struct CoverageGrid {
  ReceiverGrid grid;
  TransmitterSite tx;
  double frequency_ghz = 0.0;
  std::vector<PropagationResult> results;  // row-major, row 0 = southernmost

  std::size_t covered_cells() const;
};

Vec3 transmitter_position(const Scene& scene, const TransmitterSite& tx);

// Cells are traced in parallel; output is identical to the serial reference.
CoverageGeometry trace_coverage(const Scene& scene, const TransmitterSite& tx,
                                const ReceiverGrid& grid, const SimConfig& cfg);
CoverageGeometry trace_coverage_serial(const Scene& scene, const TransmitterSite& tx,
                                       const ReceiverGrid& grid, const SimConfig& cfg);

CoverageGrid evaluate_coverage(const CoverageGeometry& geometry, const Scene& scene,
                               const TransmitterSite& tx, const SimConfig& cfg);

CoverageGrid coverage(const Scene& scene, const TransmitterSite& tx, const ReceiverGrid& grid,
                      const SimConfig& cfg);

// Columns x_m,y_m,lat,lon,distance_m,los,p_rx_dbm,pl_db; empty field = absent.
std::string coverage_csv(const CoverageGrid& grid, const Scene& scene);

// Binary PGM, north up. PL in [pl_min, pl_max] maps linearly onto 0..254;
// 255 marks cells without coverage.
std::string coverage_pgm(const CoverageGrid& grid, double pl_min_db, double pl_max_db);

}  // namespace plmodel
