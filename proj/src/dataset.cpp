#include "plmodel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"

namespace plmodel {

namespace {
constexpr double kDegPerRad = 180.0 / std::numbers::pi;
}

void Sample::validate() const {
  if (!(distance_m > 0.0)) throw ValidationError("sample: distance_m must be > 0");
  if (los != 0 && los != 1) throw ValidationError("sample: los must be 0 or 1");
  if (!std::isfinite(pl_db) || !(pl_db > 0.0)) throw ValidationError("sample: pl_db must be finite and > 0");
}

FeatureMatrix feature_matrix(const Dataset& data) {
  FeatureMatrix x(data.size(), kFeatureCount);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const FeatureVector f = data.samples[i].features();
    std::copy(f.begin(), f.end(), x.row(i).begin());
  }
  return x;
}

std::vector<double> targets(const Dataset& data) {
  std::vector<double> y;
  y.reserve(data.size());
  for (const Sample& s : data.samples) y.push_back(s.pl_db);
  return y;
}

std::vector<bool> los_flags(const Dataset& data) {
  std::vector<bool> out;
  out.reserve(data.size());
  for (const Sample& s : data.samples) out.push_back(s.los == 1);
  return out;
}

Sample sample_from_cell(const Scene& scene, const TransmitterSite& tx, double f_ghz,
                        const std::string& site_name, Vec3 rx, double distance_3d, bool los,
                        double p_rx_dbm, double rx_gain_dbi) {
  const Vec3 tx_pos = transmitter_position(scene, tx);
  const GeoPoint tx_geo = geodetic_from_local(scene, tx.position);
  const GeoPoint rx_geo = geodetic_from_local(scene, rx.xy());
  const Vec2 d_xy = rx.xy() - tx.position;
  const double p_tx = tx.power_dbm();
  Sample s;
  s.site = site_name;
  s.h_tx_m = tx.height_agl;
  s.p_tx_dbm = p_tx;
  s.f_ghz = f_ghz;
  s.distance_m = distance_3d;
  s.elevation_deg = std::atan2(tx_pos.z - rx.z, norm(d_xy)) * kDegPerRad;
  s.los = los ? 1 : 0;
  s.dlat_deg = rx_geo.lat_deg - tx_geo.lat_deg;
  s.dlon_deg = rx_geo.lon_deg - tx_geo.lon_deg;
  double az = std::atan2(d_xy.x, d_xy.y) * kDegPerRad;
  if (az < 0.0) az += 360.0;
  s.azimuth_deg = az;
  s.p_rx_dbm = p_rx_dbm;
  s.pl_db = path_loss(p_tx, tx.gain_dbi, rx_gain_dbi, p_rx_dbm);
  s.validate();
  return s;
}

Dataset from_coverage(const CoverageGrid& grid, const TransmitterSite& tx, const Scene& scene,
                      double f_ghz, const std::string& site_name) {
  if (grid.tx.position != tx.position || grid.tx.height_agl != tx.height_agl ||
      grid.tx.power_w != tx.power_w || grid.tx.gain_dbi != tx.gain_dbi) {
    throw ValidationError("from_coverage: grid was produced for a different transmitter");
  }
  if (grid.frequency_ghz != f_ghz) {
    throw ValidationError("from_coverage: grid was produced at a different frequency");
  }
  Dataset out;
  for (const PropagationResult& r : grid.results) {
    if (!r.p_rx_dbm) continue;
    out.samples.push_back(sample_from_cell(scene, tx, f_ghz, site_name, r.rx_position, r.distance_3d,
                                           r.los, *r.p_rx_dbm, grid.grid.rx_gain_dbi));
  }
  return out;
}

std::vector<Dataset> sweep(const Scene& scene, std::span<const TransmitterSite> sites,
                           const SweepValues& values, const ReceiverGrid& grid,
                           const SimConfig& base_cfg, std::vector<SubDatasetInfo>* info) {
  if (values.f_ghz.empty() || values.h_tx_m.empty() || values.p_tx_w.empty()) {
    throw ValidationError("sweep: every sweep set must be non-empty");
  }
  std::vector<Dataset> out;
  for (const TransmitterSite& site : sites) {
    std::vector<CoverageGeometry> geometries;
    for (double h : values.h_tx_m) {
      TransmitterSite tx = site;
      tx.height_agl = h;
      tx.power_w = values.p_tx_w.front();
      geometries.push_back(trace_coverage(scene, tx, grid, base_cfg));
    }
    Dataset merged;
    for (double f : values.f_ghz) {
      SimConfig cfg = base_cfg;
      cfg.frequency_ghz = f;
      for (std::size_t hi = 0; hi < values.h_tx_m.size(); ++hi) {
        for (double p : values.p_tx_w) {
          TransmitterSite tx = site;
          tx.height_agl = values.h_tx_m[hi];
          tx.power_w = p;
          const CoverageGrid cov = evaluate_coverage(geometries[hi], scene, tx, cfg);
          Dataset part = from_coverage(cov, tx, scene, f, site.name);
          if (info) {
            info->push_back({site.name, f, tx.height_agl, p, cov.results.size(), part.size()});
          }
          std::move(part.samples.begin(), part.samples.end(), std::back_inserter(merged.samples));
        }
      }
    }
    out.push_back(std::move(merged));
  }
  return out;
}

Dataset concat(std::span<const Dataset> parts) {
  Dataset out;
  for (const Dataset& d : parts) out.samples.insert(out.samples.end(), d.samples.begin(), d.samples.end());
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string dataset_csv(const Dataset& data) {
  std::string out;
  for (std::size_t i = 0; i < kDatasetColumns.size(); ++i) {
    if (i) out.push_back(',');
    out += kDatasetColumns[i];
  }
  out.push_back('\n');
  for (const Sample& s : data.samples) {
    out += s.site + ',' + format_double(s.h_tx_m) + ',' + format_double(s.p_tx_dbm) + ',' +
           format_double(s.f_ghz) + ',' + format_double(s.distance_m) + ',' +
           format_double(s.elevation_deg) + ',' + std::to_string(s.los) + ',' +
           format_double(s.dlat_deg) + ',' + format_double(s.dlon_deg) + ',' +
           format_optional(s.azimuth_deg) + ',' + format_optional(s.p_rx_dbm) + ',' +
           format_double(s.pl_db) + '\n';
  }
  return out;
}

Dataset parse_dataset_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (std::string_view col : kDatasetColumns) {
    if (!table.column(col)) missing.emplace_back(col);
  }
  for (const std::string& col : table.header) {
    if (std::find(kDatasetColumns.begin(), kDatasetColumns.end(), col) == kDatasetColumns.end()) {
      extra.push_back(col);
    }
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "dataset header mismatch";
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
      return s;
    };
    if (!missing.empty()) msg += "; missing columns: " + join(missing);
    if (!extra.empty()) msg += "; extra columns: " + join(extra);
    throw SchemaError(msg);
  }

  std::array<std::size_t, kDatasetColumns.size()> idx{};
  for (std::size_t i = 0; i < kDatasetColumns.size(); ++i) idx[i] = *table.column(kDatasetColumns[i]);

  Dataset out;
  out.samples.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = "dataset row " + std::to_string(r + 1);
    auto num = [&](std::size_t col) {
      const auto v = parse_double(row[idx[col]]);
      if (!v) {
        throw ParseError(where + ": column '" + std::string(kDatasetColumns[col]) +
                         "' is not a number: '" + row[idx[col]] + "'");
      }
      return *v;
    };
    auto opt = [&](std::size_t col) -> std::optional<double> {
      if (row[idx[col]].empty()) return std::nullopt;
      return num(col);
    };
    Sample s;
    s.site = row[idx[0]];
    s.h_tx_m = num(1);
    s.p_tx_dbm = num(2);
    s.f_ghz = num(3);
    s.distance_m = num(4);
    s.elevation_deg = num(5);
    const std::string& los = row[idx[6]];
    if (los != "0" && los != "1") throw ParseError(where + ": column 'los' must be 0 or 1");
    s.los = los == "1" ? 1 : 0;
    s.dlat_deg = num(7);
    s.dlon_deg = num(8);
    s.azimuth_deg = opt(9);
    s.p_rx_dbm = opt(10);
    s.pl_db = num(11);
    try {
      s.validate();
    } catch (const ValidationError& e) {
      throw ParseError(where + ": " + e.what());
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_csv(data));
}

Dataset load_csv(const std::filesystem::path& path) { return parse_dataset_csv(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("split: test_fraction must lie in (0, 1)");
  }
  if (!(validation_fraction_of_train > 0.0 && validation_fraction_of_train < 1.0)) {
    throw ValidationError("split: validation fraction must lie in (0, 1)");
  }
  if (k < 2) throw ValidationError("split: k must be >= 2");
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.schema_version = data.schema_version;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) out.samples.push_back(data.samples[i]);
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("split: test_fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  const auto perm = permutation(n, seed);
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {subset(data, train), subset(data, test)};
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, const SplitSpec& spec) {
  spec.validate();
  return train_test_split(data, spec.test_fraction, spec.seed);
}

std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("kfold: k must be >= 2");
  if (n < static_cast<std::size_t>(k)) {
    throw ValidationError("kfold: " + std::to_string(n) + " samples cannot fill " +
                          std::to_string(k) + " folds");
  }
  const auto perm = permutation(n, seed);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::vector<int> owner(n);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) owner[perm[pos++]] = static_cast<int>(f);
  }
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      (owner[i] == static_cast<int>(f) ? folds[f].holdout : folds[f].train).push_back(i);
    }
  }
  return folds;
}

std::vector<std::pair<Dataset, Dataset>> kfold(const Dataset& data, int k, std::uint64_t seed) {
  std::vector<std::pair<Dataset, Dataset>> out;
  for (const Fold& f : kfold(data.size(), k, seed)) {
    out.emplace_back(subset(data, f.train), subset(data, f.holdout));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

void Normalizer::apply_in_place(std::span<double> row) const {
  if (row.size() != min.size()) {
    throw SchemaError("normalizer: expected " + std::to_string(min.size()) + " features, got " +
                      std::to_string(row.size()));
  }
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = max[j] - min[j];
    row[j] = range > 0.0 ? (row[j] - min[j]) / range : 0.0;
  }
}

Normalizer normalize_fit(const FeatureMatrix& train) {
  if (train.rows == 0) throw ValidationError("normalize_fit: empty training set");
  Normalizer n;
  n.min.assign(train.cols, 0.0);
  n.max.assign(train.cols, 0.0);
  for (std::size_t j = 0; j < train.cols; ++j) {
    n.min[j] = n.max[j] = train(0, j);
  }
  for (std::size_t i = 1; i < train.rows; ++i) {
    for (std::size_t j = 0; j < train.cols; ++j) {
      n.min[j] = std::min(n.min[j], train(i, j));
      n.max[j] = std::max(n.max[j], train(i, j));
    }
  }
  return n;
}

Normalizer normalize_fit(const Dataset& train) { return normalize_fit(feature_matrix(train)); }

FeatureMatrix normalize_apply(const Normalizer& norm, const FeatureMatrix& x) {
  FeatureMatrix out = x;
  for (std::size_t i = 0; i < out.rows; ++i) norm.apply_in_place(out.row(i));
  return out;
}

Dataset normalize_apply(const Normalizer& norm, const Dataset& data) {
  Dataset out = data;
  for (Sample& s : out.samples) {
    FeatureVector f = s.features();
    norm.apply_in_place(f);
    s.h_tx_m = f[0];
    s.p_tx_dbm = f[1];
    s.f_ghz = f[2];
    s.distance_m = f[3];
    s.elevation_deg = f[4];
    s.los = static_cast<int>(std::lround(f[5]));
    s.dlat_deg = f[6];
    s.dlon_deg = f[7];
  }
  return out;
}

}  // namespace plmodel
