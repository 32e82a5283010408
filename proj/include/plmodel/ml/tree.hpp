#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "plmodel/dataset.hpp"

namespace plmodel {

struct DtrConfig {
  std::optional<int> max_depth = 30;  // nullopt: unlimited
  int min_samples_split = 2;
  // Features examined per node; 0 examines all of them.
  int max_features = 0;

  void validate() const;
};

/// Internal nodes send x[feature] <= threshold left. Leaves have feature -1.
/// `value` is the mean training target of the node; model files keep it for
/// leaves only.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
  std::uint32_t count = 0;

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features);

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t leaf_count() const;
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

DecisionTree dtr_train(const FeatureMatrix& x, std::span<const double> y, const DtrConfig& cfg);

// Trains on the multiset of rows named by `rows`; duplicates count as
// separate samples. `seed` drives per-node feature sampling only.
DecisionTree dtr_train_rows(const FeatureMatrix& x, std::span<const double> y,
                            std::span<const std::uint32_t> rows, const DtrConfig& cfg,
                            std::uint64_t seed = 0);

}  // namespace plmodel
