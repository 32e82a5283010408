#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plmodel/raysim.hpp"
#include "plmodel/scene.hpp"

namespace plmodel {

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "h_tx_m", "p_tx_dbm", "f_ghz", "distance_m", "elevation_deg", "los", "dlat_deg", "dlon_deg"};
inline constexpr std::array<std::string_view, 12> kDatasetColumns{
    "site",     "h_tx_m",   "p_tx_dbm",    "f_ghz",    "distance_m", "elevation_deg",
    "los",      "dlat_deg", "dlon_deg",    "azimuth_deg", "p_rx_dbm", "pl_db"};
inline constexpr int kDatasetSchemaVersion = 1;

using FeatureVector = std::array<double, kFeatureCount>;

/// One labelled observation: eight model features, the PL target, and
/// metadata that never reaches a model.
struct Sample {
  double h_tx_m = 0.0;
  double p_tx_dbm = 0.0;
  double f_ghz = 0.0;
  double distance_m = 0.0;
  double elevation_deg = 0.0;
  int los = 0;
  double dlat_deg = 0.0;
  double dlon_deg = 0.0;
  double pl_db = 0.0;
  std::string site;
  std::optional<double> azimuth_deg;
  std::optional<double> p_rx_dbm;

  FeatureVector features() const {
    return {h_tx_m, p_tx_dbm, f_ghz, distance_m, elevation_deg, static_cast<double>(los),
            dlat_deg, dlon_deg};
  }
  void validate() const;
};

struct Dataset {
  int schema_version = kDatasetSchemaVersion;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Dense row-major matrix of model inputs.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

FeatureMatrix feature_matrix(const Dataset& data);
std::vector<double> targets(const Dataset& data);
std::vector<bool> los_flags(const Dataset& data);

// One sample for a covered receiver at `rx` (absolute height). Elevation is
// the angle of the transmitter above the receiver's horizon; azimuth is the
// compass bearing from transmitter to receiver.
Sample sample_from_cell(const Scene& scene, const TransmitterSite& tx, double f_ghz,
                        const std::string& site_name, Vec3 rx, double distance_3d, bool los,
                        double p_rx_dbm, double rx_gain_dbi);

// Samples are built from covered cells only. Throws ValidationError when the
// grid was produced for a different transmitter or frequency.
Dataset from_coverage(const CoverageGrid& grid, const TransmitterSite& tx, const Scene& scene,
                      double f_ghz, const std::string& site_name);

struct SweepValues {
  std::vector<double> f_ghz{1.5, 2.3, 2.5, 3.5, 6.0};
  std::vector<double> h_tx_m{12.0, 16.0, 21.0};
  std::vector<double> p_tx_w{5.0, 10.0, 15.0};

  std::size_t combinations() const { return f_ghz.size() * h_tx_m.size() * p_tx_w.size(); }
};

struct SubDatasetInfo {
  std::string site;
  double f_ghz;
  double h_tx_m;
  double p_tx_w;
  std::size_t cells;
  std::size_t covered;
};

/// One merged dataset per site over the Cartesian product of the sweep,
/// ordered frequency-major, then height, then power. Geometry is traced once
/// per (site, height) and re-evaluated per frequency and power. `sites`
/// supply position and gain; their height and power fields are overridden.
std::vector<Dataset> sweep(const Scene& scene, std::span<const TransmitterSite> sites,
                           const SweepValues& values, const ReceiverGrid& grid,
                           const SimConfig& base_cfg, std::vector<SubDatasetInfo>* info = nullptr);

Dataset concat(std::span<const Dataset> parts);

std::string dataset_csv(const Dataset& data);
Dataset parse_dataset_csv(std::string_view text);
void save_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

struct SplitSpec {
  double test_fraction = 0.2;
  double validation_fraction_of_train = 0.15;
  int k = 10;
  std::uint64_t seed = 42;

  void validate() const;
};

Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

// Deterministic permutation by seed; |test| = round(fraction N). Both parts
// keep the original relative order.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, const SplitSpec& spec);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

// k disjoint holdouts whose sizes differ by at most one; indices ascending.
std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed);
std::vector<std::pair<Dataset, Dataset>> kfold(const Dataset& data, int k, std::uint64_t seed);

/// Per-feature min-max scaling learned from training data only.
struct Normalizer {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const { return min.size(); }
  void apply_in_place(std::span<double> row) const;
};

Normalizer normalize_fit(const FeatureMatrix& train);
Normalizer normalize_fit(const Dataset& train);
FeatureMatrix normalize_apply(const Normalizer& norm, const FeatureMatrix& x);
// Feature fields mapped to [0, 1] over the fit set; targets and metadata untouched.
Dataset normalize_apply(const Normalizer& norm, const Dataset& data);

}  // namespace plmodel
