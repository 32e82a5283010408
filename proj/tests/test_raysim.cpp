#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "plmodel/empirical.hpp"
#include "plmodel/error.hpp"
#include "plmodel/raysim.hpp"
#include "path_oracles.hpp"
#include "support.hpp"

using namespace plmodel;
using namespace plmodel::test;

namespace {

constexpr double kPi = std::numbers::pi;

Scene demo_scene() {
  return load_scene(std::filesystem::path(PLMODEL_DATA_DIR) / "scenes" / "suburb_demo.json");
}

// Minimum over the wall rectangle of |tx - P| + |P - rx| by nested
// golden-section search; the objective is convex in (s, z).
double brute_force_reflection(Vec2 a, Vec2 b, double z_hi, Vec3 tx, Vec3 rx, Vec3* best_point) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto golden = [&](auto f, double lo, double hi, double* arg) {
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 200; ++i) {
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = f(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = f(x2);
      }
    }
    *arg = 0.5 * (lo + hi);
    return f(*arg);
  };
  auto point = [&](double s, double z) { return Vec3{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), z}; };
  auto inner = [&](double s) {
    double z;
    return golden([&](double zz) { const Vec3 p = point(s, zz); return distance(tx, p) + distance(p, rx); },
                  0.0, z_hi, &z);
  };
  double s_best;
  const double best = golden(inner, 0.0, 1.0, &s_best);
  double z_best;
  golden([&](double zz) { const Vec3 p = point(s_best, zz); return distance(tx, p) + distance(p, rx); }, 0.0,
         z_hi, &z_best);
  *best_point = point(s_best, z_best);
  return best;
}

}  // namespace

TEST_CASE("sim config validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  c.frequency_ghz = 0.05;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.frequency_ghz = 2.3;
  c.max_reflections = 5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.reflection_limit = 6;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("los_blocked") {
  const Scene empty = test::empty_scene();
  CHECK_FALSE(los_blocked(empty, {-50, 3, 10}, {80, -20, 1.5}));
  CHECK(los_blocked(empty, {-50, 3, 10}, {80, -20, -1.0}));

  const Scene s = test::single_building_scene(test::rect(-5, -5, 5, 5), 10.0);
  CHECK(los_blocked(s, {-20, 0, 5}, {20, 0, 5}));
  CHECK_FALSE(los_blocked(s, {-20, 0, 12}, {20, 0, 12}));
  CHECK(los_blocked(s, {-20, 0, 10}, {20, 0, 10}));  // grazing the roof counts
  CHECK(los_blocked(s, {-20, 5, 3}, {20, 5, 3}));    // grazing a wall counts
}

TEST_CASE("los_blocked agrees with a dense sampling oracle") {
  const Polygon l_block{{0, 0}, {20, 0}, {20, 10}, {10, 10}, {10, 20}, {0, 20}};
  const Scene s = test::single_building_scene(l_block, 10.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uxy(-20.0, 40.0), uz(0.5, 18.0);
  int disagreements = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Vec3 a{uxy(rng), uxy(rng), uz(rng)}, b{uxy(rng), uxy(rng), uz(rng)};
    if (inside_any_building(s, a) || inside_any_building(s, b)) continue;
    bool hit = false;
    constexpr int kSteps = 100000;
    for (int i = 0; i <= kSteps && !hit; ++i) {
      const double t = static_cast<double>(i) / kSteps;
      const Vec3 p = a + t * (b - a);
      hit = p.z <= 10.0 && classify_point(l_block, p.xy()) != Containment::outside;
    }
    if (hit != los_blocked(s, a, b)) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("fresnel coefficients") {
  const Material lossless{"d", 4.0, 0.0, 0.0};
  const auto te = fresnel_reflection(lossless, 2.0, 0.0, Polarization::perpendicular);
  const auto tm = fresnel_reflection(lossless, 2.0, 0.0, Polarization::parallel);
  CHECK(te.real() == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(te.imag()) < 1e-15);
  // ITU-R P.2040 sign convention: TM is +1/3 at normal incidence, same magnitude
  CHECK(tm.real() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(tm) == doctest::Approx(std::abs(te)).epsilon(1e-12));

  const double brewster = std::atan(2.0);
  CHECK(std::abs(fresnel_reflection(lossless, 2.0, brewster, Polarization::parallel)) < 1e-12);

  const double grazing = kPi / 2 - 1e-7;
  CHECK(std::abs(fresnel_reflection(concrete_material(), 3.5, grazing, Polarization::perpendicular)) > 0.999);
  CHECK(std::abs(fresnel_reflection(concrete_material(), 3.5, grazing, Polarization::parallel)) > 0.999);

  const Material pec{"pec", 2.0, 1e12, 0.0};
  for (double ang : {0.0, 0.4, 1.0, 1.5}) {
    CHECK(std::abs(fresnel_reflection(pec, 1.5, ang, Polarization::perpendicular)) > 0.9999);
    CHECK(std::abs(fresnel_reflection(pec, 1.5, ang, Polarization::parallel)) > 0.9999);
  }

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Material m{"m", 1.0 + 20.0 * u(rng), 5.0 * u(rng), u(rng)};
    const double ang = kPi / 2 * u(rng);
    CHECK(std::abs(fresnel_reflection(m, 0.1 + 10 * u(rng), ang, Polarization::perpendicular)) <= 1.0 + 1e-12);
    CHECK(std::abs(fresnel_reflection(m, 0.1 + 10 * u(rng), ang, Polarization::parallel)) <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(fresnel_reflection(lossless, 2.0, 1.7, Polarization::parallel), DomainError);
  CHECK_THROWS_AS(fresnel_reflection(lossless, 2.0, -0.1, Polarization::parallel), DomainError);
}

TEST_CASE("empty scene paths") {
  const Scene s = test::empty_scene();
  SimConfig cfg;
  cfg.max_reflections = 0;
  const Vec3 tx{0, 0, 20}, rx{120, 35, 1.5};
  auto paths = trace_paths(s, tx, rx, cfg);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].kind == PathKind::direct);
  CHECK(paths[0].length == doctest::Approx(distance(tx, rx)).epsilon(1e-15));

  cfg.max_reflections = 2;
  paths = trace_paths(s, tx, rx, cfg);
  REQUIRE(paths.size() == 2);
  CHECK(paths[1].kind == PathKind::reflected);
  CHECK(paths[1].interactions[0].surface == SurfaceKind::ground);
  const Vec3 image{tx.x, tx.y, -tx.z};
  CHECK(paths[1].length == doctest::Approx(distance(image, rx)).epsilon(1e-12));
}

TEST_CASE("single wall reflection matches a brute-force search") {
  const Scene s = test::single_building_scene(test::rect(-20, 10, 20, 30), 15.0);
  SimConfig cfg;
  cfg.max_reflections = 1;
  const Vec3 tx{-30, -10, 8}, rx{25, -5, 1.5};
  const auto paths = trace_paths(s, tx, rx, cfg);
  std::vector<RayPath> wall;
  for (const RayPath& p : paths) {
    if (p.kind == PathKind::reflected && p.interactions[0].surface == SurfaceKind::wall) wall.push_back(p);
  }
  REQUIRE(wall.size() == 1);
  const RayPath& p = wall[0];
  const Polygon& fp = s.buildings()[0].footprint;
  const auto e = static_cast<std::size_t>(p.interactions[0].edge);
  Vec3 best_point;
  const double best = brute_force_reflection(fp[e], fp[(e + 1) % fp.size()], 15.0, tx, rx, &best_point);
  CHECK(p.length == doctest::Approx(best).epsilon(1e-9));
  CHECK(distance(p.vertices[1], best_point) < 1e-4);
  CHECK(p.vertices[1].y == doctest::Approx(10.0));  // the south face
  const Vec3 image{tx.x, 2 * 10.0 - tx.y, tx.z};
  CHECK(p.length == doctest::Approx(distance(image, rx)).epsilon(1e-12));

  // a receiver on the far side sees no reflection off this face
  const auto hidden = trace_paths(s, tx, {0, 40, 1.5}, cfg);
  for (const RayPath& q : hidden) {
    if (q.kind == PathKind::reflected && q.interactions[0].surface == SurfaceKind::wall) {
      CHECK(q.interactions[0].edge != p.interactions[0].edge);
    }
  }
}

TEST_CASE("reflected paths satisfy the specular law and unfolded length on the demo scene") {
  const Scene s = demo_scene();
  SimConfig cfg;
  cfg.max_reflections = 3;
  cfg.max_wall_reflections = 2;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uxy(-400.0, 400.0);
  PathCheck worst;
  std::size_t reflected = 0;
  std::size_t multi_wall = 0;
  for (int i = 0; i < 40; ++i) {
    Vec3 tx{uxy(rng), uxy(rng), 25.0}, rx{uxy(rng), uxy(rng), 1.5};
    if (inside_any_building(s, tx) || inside_any_building(s, rx)) continue;
    for (const RayPath& p : trace_paths(s, tx, rx, cfg)) {
      if (p.kind != PathKind::reflected) continue;
      ++reflected;
      int walls = 0;
      for (const auto& it : p.interactions) walls += it.surface == SurfaceKind::wall;
      multi_wall += walls >= 2;
      CHECK(p.reflection_coeffs.size() == p.interactions.size());
      for (const auto& g : p.reflection_coeffs) CHECK(std::abs(g) <= 1.0);
      const PathCheck c = check_path(s, p);
      worst.specular = std::max(worst.specular, c.specular);
      worst.mirror = std::max(worst.mirror, c.mirror);
      worst.unfolded = std::max(worst.unfolded, c.unfolded);
    }
  }
  CHECK(reflected > 40);
  CHECK(multi_wall > 0);
  CHECK(worst.specular < 1e-9);
  CHECK(worst.mirror < 1e-9);
  CHECK(worst.unfolded < 1e-9);
}

TEST_CASE("received power and path loss") {
  SimConfig cfg;
  cfg.frequency_ghz = 3.5;
  const double d = 240.0;
  const RayPath direct{PathKind::direct, 0, {{0, 0, 0}, {d, 0, 0}}, d, {}, {}};
  const std::vector<RayPath> one{direct};
  const auto prx = received_power(one, cfg, 30.0, 2.0, 1.0);
  REQUIRE(prx.has_value());
  CHECK(std::abs(*prx - (33.0 - fspl(3.5, d))) < 1e-9);
  CHECK(std::abs(path_loss(30.0, 2.0, 1.0, *prx) - fspl(3.5, d)) < 1e-9);

  CHECK_FALSE(received_power({}, cfg, 30.0, 0.0, 0.0).has_value());

  // equal amplitudes, half-wavelength apart: complete cancellation
  const double lambda = cfg.wavelength_m();
  RayPath longer{PathKind::reflected, 1, {{0, 0, 0}, {d, 0, 0}}, d + lambda / 2, {}, {}};
  longer.reflection_coeffs = {std::complex<double>((d + lambda / 2) / d, 0.0)};
  const std::vector<RayPath> pair{direct, longer};
  CHECK_FALSE(received_power(pair, cfg, 30.0, 0.0, 0.0).has_value());

  CHECK(path_loss(30, 0, 0, -70) == 100.0);
  CHECK(path_loss(10.0 * std::log10(5000.0), 0, 2.1, -60) == doctest::Approx(99.0897).epsilon(1e-6));
}

TEST_CASE("two-ray far-field slope is 40 dB per decade") {
  const Material pec{"pec", 2.0, 1e9, 0.0};
  const Scene s({22.3, 39.1}, {-100, -100, 100, 100}, {pec}, {}, Terrain{FlatTerrain{0.0}, "pec"});
  SimConfig cfg;
  cfg.frequency_ghz = 0.2;
  cfg.max_reflections = 1;
  cfg.max_distance_m = 1e6;
  cfg.polarization = Polarization::perpendicular;
  const Vec3 tx{0, 0, 10};
  std::vector<double> xs, ys;
  for (int i = 0; i <= 40; ++i) {
    const double d = 2000.0 * std::pow(10.0, i / 40.0);
    const auto paths = trace_paths(s, tx, {d, 0, 1.5}, cfg);
    REQUIRE(paths.size() == 2);
    const auto g = field_gain_db(paths, cfg);
    REQUIRE(g.has_value());
    xs.push_back(std::log10(d));
    ys.push_back(-*g);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  CHECK(sxy / sxx == doctest::Approx(40.0).epsilon(1.0 / 40.0));
}

TEST_CASE("reciprocity on random pairs") {
  const Scene s = demo_scene();
  SimConfig cfg;
  cfg.max_reflections = 3;
  cfg.max_wall_reflections = 2;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uxy(-450.0, 450.0), uz(1.5, 30.0);
  int pairs = 0;
  double worst = 0.0;
  while (pairs < 100) {
    const Vec3 a{uxy(rng), uxy(rng), uz(rng)}, b{uxy(rng), uxy(rng), uz(rng)};
    if (inside_any_building(s, a) || inside_any_building(s, b)) continue;
    ++pairs;
    const auto ab = trace_paths(s, a, b, cfg);
    const auto ba = trace_paths(s, b, a, cfg);
    CHECK(ab.size() == ba.size());
    const auto pl_ab = received_power(ab, cfg, 30.0, 3.0, 1.0);
    const auto pl_ba = received_power(ba, cfg, 30.0, 1.0, 3.0);
    REQUIRE(pl_ab.has_value() == pl_ba.has_value());
    if (pl_ab) worst = std::max(worst, std::abs(*pl_ab - *pl_ba));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("coverage on an empty scene is free space") {
  const Scene s = test::empty_scene();
  SimConfig cfg;
  cfg.max_reflections = 0;
  cfg.frequency_ghz = 1.5;
  ReceiverGrid grid;
  grid.extent = {-300, -300, 300, 300};
  grid.spacing = 20;
  TransmitterSite tx{"T", {7, -3}, 15.0, 5.0, 0.0};
  const CoverageGrid cov = coverage(s, tx, grid, cfg);
  REQUIRE(cov.results.size() == grid.size());
  std::vector<std::pair<double, double>> by_distance;
  for (const auto& r : cov.results) {
    CHECK(r.los);
    REQUIRE(r.path_loss_db.has_value());
    CHECK(std::abs(*r.path_loss_db - fspl(1.5, r.distance_3d)) < 1e-9);
    by_distance.emplace_back(r.distance_3d, *r.path_loss_db);
  }
  std::sort(by_distance.begin(), by_distance.end());
  for (std::size_t i = 1; i < by_distance.size(); ++i) {
    if (by_distance[i].first > by_distance[i - 1].first) CHECK(by_distance[i].second > by_distance[i - 1].second);
  }
  CHECK(cov.covered_cells() == grid.size());
}

TEST_CASE("coverage gaps and bounds") {
  const Scene s = test::single_building_scene(test::rect(-10, 20, 10, 40), 30.0);
  SimConfig cfg;
  cfg.max_reflections = 0;
  ReceiverGrid grid;
  grid.extent = {-15, 45, 15, 75};
  grid.spacing = 10;
  TransmitterSite tx{"T", {0, 0}, 10.0, 5.0, 0.0};
  const CoverageGrid cov = coverage(s, tx, grid, cfg);
  // the middle column sits straight behind the building
  CHECK_FALSE(cov.results[1].p_rx_dbm.has_value());
  CHECK_FALSE(cov.results[1].los);
  CHECK(cov.covered_cells() < grid.size());
  const std::string csv = coverage_csv(cov, s);
  CHECK(csv.rfind("x_m,y_m,lat,lon,distance_m,los,p_rx_dbm,pl_db\n", 0) == 0);
  CHECK(csv.find(",0,,\n") != std::string::npos);
  const std::string pgm = coverage_pgm(cov, 60, 140);
  CHECK(pgm.rfind("P5\n3 3\n255\n", 0) == 0);
  CHECK(pgm.size() == std::string("P5\n3 3\n255\n").size() + 9);

  ReceiverGrid outside = grid;
  outside.extent = {500, 500, 700, 700};
  CHECK_THROWS_AS(coverage(s, tx, outside, cfg), DomainError);

  ReceiverGrid far = grid;
  far.max_distance = 10.0;
  CHECK(coverage(s, tx, far, cfg).covered_cells() == 0);
}

TEST_CASE("parallel coverage trace equals the serial reference") {
  const Scene s = demo_scene();
  SimConfig cfg;
  cfg.max_wall_reflections = 1;
  ReceiverGrid grid;
  grid.extent = {-300, -300, 300, 300};
  grid.spacing = 25;
  TransmitterSite tx{"T", {-150, 100}, 21.0, 5.0, 0.0};
  const auto par = trace_coverage(s, tx, grid, cfg);
  const auto ser = trace_coverage_serial(s, tx, grid, cfg);
  REQUIRE(par.cells.size() == ser.cells.size());
  for (std::size_t i = 0; i < par.cells.size(); ++i) {
    const auto& a = par.cells[i];
    const auto& b = ser.cells[i];
    CHECK(a.los == b.los);
    REQUIRE(a.paths.size() == b.paths.size());
    for (std::size_t k = 0; k < a.paths.size(); ++k) {
      CHECK(a.paths[k].length == b.paths[k].length);
      CHECK(a.paths[k].vertices == b.paths[k].vertices);
      CHECK(a.paths[k].interactions == b.paths[k].interactions);
    }
  }
  const auto c1 = evaluate_coverage(par, s, tx, cfg);
  const auto c2 = evaluate_coverage(ser, s, tx, cfg);
  CHECK(coverage_csv(c1, s) == coverage_csv(c2, s));
  CHECK(coverage_csv(c1, s) == coverage_csv(coverage(s, tx, grid, cfg), s));
}

TEST_CASE("taller transmitter covers at least as many cells on the demo scene") {
  const Scene s = demo_scene();
  SimConfig cfg;
  cfg.max_reflections = 0;
  ReceiverGrid grid;
  grid.extent = s.bounds();
  grid.spacing = 30;
  TransmitterSite low{"A", {-150, 100}, 12.0, 5.0, 0.0};
  TransmitterSite high = low;
  high.height_agl = 21.0;
  const auto n_low = coverage(s, low, grid, cfg).covered_cells();
  const auto n_high = coverage(s, high, grid, cfg).covered_cells();
  CHECK(n_high >= n_low);
  CHECK(n_low > 0);
}
