#include "plmodel/ml/forest.hpp"

#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include "plmodel/error.hpp"

namespace plmodel {

void RfrConfig::validate() const {
  if (n_estimators < 1) throw TrainingError("rfr: n_estimators must be >= 1");
  tree_config(1).validate();
}

DtrConfig RfrConfig::tree_config(std::size_t n_features) const {
  DtrConfig c;
  c.max_depth = max_depth;
  c.min_samples_split = min_samples_split;
  if (feature_subsampling) {
    c.max_features = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
  }
  return c;
}

RandomForest::RandomForest(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {
  if (trees_.empty()) throw ValidationError("forest: no trees");
  for (const DecisionTree& t : trees_) {
    if (t.n_features() != trees_.front().n_features()) {
      throw ValidationError("forest: trees disagree on feature count");
    }
  }
}

double RandomForest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const DecisionTree& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::predict(const FeatureMatrix& x) const {
  if (x.cols != n_features()) {
    throw SchemaError("forest: expected " + std::to_string(n_features()) + " features, got " +
                      std::to_string(x.cols));
  }
  std::vector<double> out(x.rows);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i));
  return out;
}

std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(tree) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::uint32_t> bootstrap_rows(std::size_t n, bool bootstrap, std::uint64_t seed) {
  std::vector<std::uint32_t> rows(n);
  if (!bootstrap) {
    std::iota(rows.begin(), rows.end(), 0u);
    return rows;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  for (auto& r : rows) r = pick(rng);
  return rows;
}

namespace {

void check_inputs(const FeatureMatrix& x, std::span<const double> y, const RfrConfig& cfg) {
  cfg.validate();
  if (x.rows == 0) throw TrainingError("rfr: empty training set");
  if (y.size() != x.rows) throw TrainingError("rfr: feature and target counts differ");
}

DecisionTree train_one(const FeatureMatrix& x, std::span<const double> y, const RfrConfig& cfg,
                       std::size_t t) {
  const std::uint64_t s = tree_seed(cfg.seed, t);
  const auto rows = bootstrap_rows(x.rows, cfg.bootstrap, s);
  return dtr_train_rows(x, y, rows, cfg.tree_config(x.cols), s ^ 0x5851F42D4C957F2DULL);
}

}  // namespace

RandomForest rfr_train(const FeatureMatrix& x, std::span<const double> y, const RfrConfig& cfg) {
  check_inputs(x, y, cfg);
  const auto n = static_cast<std::size_t>(cfg.n_estimators);
  std::vector<DecisionTree> trees(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t t = 0; t < n; ++t) {
    try {
      trees[t] = train_one(x, y, cfg, t);
    } catch (...) {
#pragma omp critical(plmodel_rfr_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return RandomForest(std::move(trees));
}

RandomForest rfr_train_serial(const FeatureMatrix& x, std::span<const double> y, const RfrConfig& cfg) {
  check_inputs(x, y, cfg);
  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(cfg.n_estimators));
  for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.n_estimators); ++t) {
    trees.push_back(train_one(x, y, cfg, t));
  }
  return RandomForest(std::move(trees));
}

}  // namespace plmodel
