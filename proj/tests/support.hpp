#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "plmodel/dataset.hpp"
#include "plmodel/scene.hpp"

namespace plmodel::test {

inline Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

inline Scene empty_scene(double half = 600.0) {
  return Scene({22.3, 39.1}, {-half, -half, half, half}, {}, {}, Terrain{FlatTerrain{0.0}, "concrete"});
}

inline Scene single_building_scene(const Polygon& fp, double height) {
  return Scene({22.3, 39.1}, {-600, -600, 600, 600}, {}, {Building{fp, height, "concrete"}},
               Terrain{FlatTerrain{0.0}, "concrete"});
}

// Random samples with distinct feature rows and a smooth PL trend plus noise.
inline Dataset random_dataset(std::size_t n, std::uint64_t seed, double nlos_share = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double heights[] = {12.0, 16.0, 21.0};
  const double freqs[] = {1.5, 2.3, 3.5};
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.site = i % 2 ? "A" : "B";
    s.h_tx_m = heights[i % 3];
    s.p_tx_dbm = 36.98970004336019 + 4.771212547196624 * static_cast<double>((i / 3) % 2);
    s.f_ghz = freqs[(i / 2) % 3];
    s.distance_m = 10.0 + 800.0 * u(rng);
    s.elevation_deg = 30.0 * u(rng);
    s.los = u(rng) < nlos_share ? 0 : 1;
    s.dlat_deg = 0.005 * (u(rng) - 0.5);
    s.dlon_deg = 0.005 * (u(rng) - 0.5);
    s.azimuth_deg = 360.0 * u(rng);
    if (i % 5 != 0) s.p_rx_dbm = -60.0 - 30.0 * u(rng);
    s.pl_db = 40.0 + 20.0 * std::log10(s.distance_m) + 20.0 * std::log10(s.f_ghz) + (s.los ? 0.0 : 15.0) +
              2.0 * (u(rng) - 0.5);
    d.samples.push_back(std::move(s));
  }
  return d;
}

/// Removes the directory on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("plmodel_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace plmodel::test
