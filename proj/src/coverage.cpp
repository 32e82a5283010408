#include <algorithm>
#include <cmath>
#include <string>

#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"
#include "plmodel/raysim.hpp"

namespace plmodel {

namespace {

void check_grid(const Scene& scene, const ReceiverGrid& grid) {
  grid.validate();
  const Bounds& sb = scene.bounds();
  const Bounds& g = grid.extent;
  if (g.min_x < sb.min_x || g.min_y < sb.min_y || g.max_x > sb.max_x || g.max_y > sb.max_y) {
    throw DomainError("coverage: receiver grid extends outside the scene bounds");
  }
}

CoverageGeometry::Cell trace_cell(const Scene& scene, const PathTracer& tracer, Vec3 tx,
                                  const ReceiverGrid& grid, const SimConfig& cfg,
                                  std::size_t index) {
  const std::size_t cols = grid.cols();
  const Vec2 c = grid.cell_center(index / cols, index % cols);
  CoverageGeometry::Cell cell;
  cell.rx = {c.x, c.y, scene.ground_elevation(c) + grid.rx_height};
  cell.distance_3d = distance(tx, cell.rx);
  cell.los = !los_blocked(scene, tx, cell.rx);
  if (cell.distance_3d <= grid.max_distance && cell.distance_3d <= cfg.max_distance_m) {
    cell.paths = tracer.trace(cell.rx);
  }
  return cell;
}

CoverageGeometry prepare(const Scene& scene, const TransmitterSite& tx, const ReceiverGrid& grid) {
  check_grid(scene, grid);
  tx.validate();
  CoverageGeometry geo;
  geo.grid = grid;
  geo.tx = transmitter_position(scene, tx);
  geo.cells.resize(grid.size());
  return geo;
}

}  // namespace

Vec3 transmitter_position(const Scene& scene, const TransmitterSite& tx) {
  return {tx.position.x, tx.position.y, scene.ground_elevation(tx.position) + tx.height_agl};
}

std::size_t CoverageGrid::covered_cells() const {
  return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& r) {
    return r.p_rx_dbm.has_value();
  }));
}

CoverageGeometry trace_coverage(const Scene& scene, const TransmitterSite& tx,
                                const ReceiverGrid& grid, const SimConfig& cfg) {
  CoverageGeometry geo = prepare(scene, tx, grid);
  const PathTracer tracer(scene, geo.tx, cfg);
  const auto n = static_cast<std::ptrdiff_t>(geo.cells.size());
  // Each cell writes only its own slot, so scheduling cannot change the result.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    geo.cells[static_cast<std::size_t>(i)] =
        trace_cell(scene, tracer, geo.tx, grid, cfg, static_cast<std::size_t>(i));
  }
  return geo;
}

CoverageGeometry trace_coverage_serial(const Scene& scene, const TransmitterSite& tx,
                                       const ReceiverGrid& grid, const SimConfig& cfg) {
  CoverageGeometry geo = prepare(scene, tx, grid);
  const PathTracer tracer(scene, geo.tx, cfg);
  for (std::size_t i = 0; i < geo.cells.size(); ++i) {
    geo.cells[i] = trace_cell(scene, tracer, geo.tx, grid, cfg, i);
  }
  return geo;
}

CoverageGrid evaluate_coverage(const CoverageGeometry& geometry, const Scene& scene,
                               const TransmitterSite& tx, const SimConfig& cfg) {
  cfg.validate();
  CoverageGrid out;
  out.grid = geometry.grid;
  out.tx = tx;
  out.frequency_ghz = cfg.frequency_ghz;
  out.results.reserve(geometry.cells.size());
  const double p_tx = tx.power_dbm();
  for (const auto& cell : geometry.cells) {
    PropagationResult r;
    r.rx_position = cell.rx;
    r.distance_3d = cell.distance_3d;
    r.los = cell.los;
    r.paths = cell.paths;
    assign_reflection_coeffs(r.paths, scene, cfg);
    r.p_rx_dbm = received_power(r.paths, cfg, p_tx, tx.gain_dbi, geometry.grid.rx_gain_dbi);
    if (r.p_rx_dbm) {
      r.path_loss_db = path_loss(p_tx, tx.gain_dbi, geometry.grid.rx_gain_dbi, *r.p_rx_dbm);
    }
    out.results.push_back(std::move(r));
  }
  return out;
}

CoverageGrid coverage(const Scene& scene, const TransmitterSite& tx, const ReceiverGrid& grid,
                      const SimConfig& cfg) {
  return evaluate_coverage(trace_coverage(scene, tx, grid, cfg), scene, tx, cfg);
}

std::string coverage_csv(const CoverageGrid& grid, const Scene& scene) {
  std::string out = "x_m,y_m,lat,lon,distance_m,los,p_rx_dbm,pl_db\n";
  for (const PropagationResult& r : grid.results) {
    const GeoPoint g = geodetic_from_local(scene, r.rx_position.xy());
    out += format_double(r.rx_position.x) + ',' + format_double(r.rx_position.y) + ',' +
           format_double(g.lat_deg) + ',' + format_double(g.lon_deg) + ',' +
           format_double(r.distance_3d) + ',' + (r.los ? "1" : "0") + ',' +
           format_optional(r.p_rx_dbm) + ',' + format_optional(r.path_loss_db) + '\n';
  }
  return out;
}

std::string coverage_pgm(const CoverageGrid& grid, double pl_min_db, double pl_max_db) {
  if (!(pl_max_db > pl_min_db)) throw DomainError("coverage_pgm: pl_max must exceed pl_min");
  const std::size_t rows = grid.grid.rows();
  const std::size_t cols = grid.grid.cols();
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  for (std::size_t r = rows; r-- > 0;) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& pl = grid.results[r * cols + c].path_loss_db;
      unsigned char px = 255;
      if (pl) {
        const double t = std::clamp((*pl - pl_min_db) / (pl_max_db - pl_min_db), 0.0, 1.0);
        px = static_cast<unsigned char>(std::lround(254.0 * t));
      }
      out.push_back(static_cast<char>(px));
    }
  }
  return out;
}

}  // namespace plmodel
