#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "plmodel/ml/tree.hpp"

namespace plmodel {

struct RfrConfig {
  int n_estimators = 100;
  std::optional<int> max_depth = 30;
  int min_samples_split = 2;
  bool bootstrap = true;
  // Examine floor(sqrt(p)) random features per node instead of all p.
  bool feature_subsampling = false;
  std::uint64_t seed = 42;

  void validate() const;
  DtrConfig tree_config(std::size_t n_features) const;
};

class RandomForest {
 public:
  RandomForest() = default;
  explicit RandomForest(std::vector<DecisionTree> trees);

  // (1/T) sum_t tree_t(x)
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return trees_.empty() ? 0 : trees_.front().n_features(); }

 private:
  std::vector<DecisionTree> trees_;
};

// Per-tree seed mixed from (seed, tree index) with splitmix64.
std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree);

// Bootstrap rows for one tree; identity when bootstrap is off.
std::vector<std::uint32_t> bootstrap_rows(std::size_t n, bool bootstrap, std::uint64_t seed);

// Trees are trained concurrently; the result equals rfr_train_serial exactly.
RandomForest rfr_train(const FeatureMatrix& x, std::span<const double> y, const RfrConfig& cfg);
RandomForest rfr_train_serial(const FeatureMatrix& x, std::span<const double> y, const RfrConfig& cfg);

}  // namespace plmodel
