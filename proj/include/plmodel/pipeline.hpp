#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plmodel/dataset.hpp"
#include "plmodel/empirical.hpp"
#include "plmodel/metrics.hpp"
#include "plmodel/ml/model.hpp"
#include "plmodel/raysim.hpp"
#include "plmodel/scene.hpp"

namespace plmodel {

enum class Scale { small, full_sweep };

std::string to_string(Scale s);
Scale parse_scale(std::string_view name);

/// Everything `reproduce` needs. Sites named in `holdout_sites` are never
/// trained on; the rest form the training pool.
struct RunConfig {
  Scale scale = Scale::small;
  std::uint64_t seed = 42;
  std::optional<std::filesystem::path> scene_path;
  SceneGenSpec scene_gen;
  double site_roof_height_m = 11.0;
  double site_roof_half_width_m = 6.0;
  std::vector<TransmitterSite> sites;
  std::vector<std::string> holdout_sites;
  SweepValues sweep;
  ReceiverGrid grid;  // empty extent means the scene bounds
  SimConfig sim;
  SplitSpec split;
  std::vector<ModelSpec> models;
  double curve_bin_m = 50.0;

  void validate() const;
};

RunConfig default_run_config(Scale scale);
// Overrides the scene, split and model seeds with `seed`.
void apply_seed(RunConfig& cfg, std::uint64_t seed);
std::string run_config_json(const RunConfig& cfg);
// Keys absent from the document keep the defaults of its "scale".
RunConfig parse_run_config(std::string_view text);

enum class Baseline { ci_fit, cost231, fspl };
std::string to_string(Baseline b);
Baseline parse_baseline(std::string_view name);

struct BaselinePrediction {
  std::vector<double> pl_db;
  // Per warning kind, the number of samples that triggered it.
  std::vector<std::pair<Cost231Warning, std::size_t>> warnings;
};

// CI predictions need `ci`; distances below its d0 are clamped to d0.
BaselinePrediction baseline_predict(Baseline b, const Dataset& data, const CiParams& ci,
                                    double rx_height_m);
CiParams ci_fit_dataset(const Dataset& data, double d0 = 1.0);

/// Mean simulated and mean predicted PL per distance bin; one predicted
/// column per named series.
std::string pl_curve_csv(const Dataset& data, double bin_m,
                         const std::vector<std::pair<std::string, std::vector<double>>>& series);

struct GateResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ReproduceResult {
  std::vector<GateResult> gates;
  std::filesystem::path manifest_path;

  bool all_passed() const;
};

/// Generates or loads the scene, sweeps every site, trains the configured
/// models on the training sites, evaluates them and the baselines on the
/// test split and on each held-out site, writes every artifact plus a
/// content-hashed manifest into `out_dir`, and checks the gates. `out_dir`
/// must not exist or be empty. Progress and timings go to `log` only.
ReproduceResult reproduce(const RunConfig& cfg, const std::filesystem::path& out_dir,
                          std::ostream* log);

// Relative path, byte size and SHA-256 of every regular file under `dir`,
// sorted by path, excluding `exclude`.
struct ManifestEntry {
  std::string path;
  std::uintmax_t bytes = 0;
  std::string sha256;
};
std::vector<ManifestEntry> hash_tree(const std::filesystem::path& dir, std::string_view exclude = {});

}  // namespace plmodel
