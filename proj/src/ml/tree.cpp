#include "plmodel/ml/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "plmodel/error.hpp"

namespace plmodel {

void DtrConfig::validate() const {
  if (max_depth && *max_depth < 1) throw TrainingError("dtr: max_depth must be >= 1");
  if (min_samples_split < 2) throw TrainingError("dtr: min_samples_split must be >= 2");
  if (max_features < 0) throw TrainingError("dtr: max_features must be >= 0");
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw ValidationError("tree: no nodes");
  const auto n = static_cast<std::int64_t>(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    if (node.is_leaf()) continue;
    if (static_cast<std::size_t>(node.feature) >= n_features_ || node.left <= static_cast<std::int64_t>(i) ||
        node.right <= static_cast<std::int64_t>(i) || node.left >= n || node.right >= n) {
      throw ValidationError("tree: node " + std::to_string(i) + " is malformed");
    }
  }
}

double DecisionTree::predict(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw SchemaError("tree: expected " + std::to_string(n_features_) + " features, got " +
                      std::to_string(x.size()));
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                             : node.right);
  }
  return nodes_[i].value;
}

std::vector<double> DecisionTree::predict(const FeatureMatrix& x) const {
  std::vector<double> out(x.rows);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i));
  return out;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  std::size_t n_left = 0;
  double cost = std::numeric_limits<double>::infinity();
};

struct Task {
  std::size_t node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

// Presorted CART builder. order[f] holds sample slots sorted by feature f;
// each node owns the same [begin, end) range in every order array.
class Builder {
 public:
  Builder(const FeatureMatrix& x, std::span<const double> y, std::span<const std::uint32_t> rows,
          const DtrConfig& cfg, std::uint64_t seed)
      : x_(x), cfg_(cfg), rng_(seed), n_(rows.size()), p_(x.cols) {
    rows_.assign(rows.begin(), rows.end());
    y_.resize(n_);
    for (std::size_t s = 0; s < n_; ++s) y_[s] = y[rows_[s]];
    order_.assign(p_, std::vector<std::uint32_t>(n_));
    for (std::size_t f = 0; f < p_; ++f) {
      auto& o = order_[f];
      std::iota(o.begin(), o.end(), 0u);
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
        return value(a, f) < value(b, f);
      });
    }
    goes_left_.assign(n_, 0);
    scratch_.resize(n_);
    features_.resize(p_);
  }

  std::vector<TreeNode> build() {
    std::vector<TreeNode> nodes(1);
    std::vector<Task> stack{{0, 0, n_, 0}};
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const auto [mean, uniform] = stats(t.begin, t.end);
      TreeNode& node = nodes[t.node];
      node.value = mean;
      node.count = static_cast<std::uint32_t>(t.end - t.begin);
      const bool depth_done = cfg_.max_depth && t.depth >= *cfg_.max_depth;
      if (uniform || depth_done || t.end - t.begin < static_cast<std::size_t>(cfg_.min_samples_split)) {
        continue;
      }
      const Split split = best_split(t.begin, t.end, mean);
      if (split.feature < 0) continue;
      partition(t.begin, t.end, split);
      const std::size_t left = nodes.size();
      nodes.resize(left + 2);
      TreeNode& parent = nodes[t.node];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = static_cast<std::int32_t>(left);
      parent.right = static_cast<std::int32_t>(left + 1);
      const std::size_t mid = t.begin + split.n_left;
      stack.push_back({left + 1, mid, t.end, t.depth + 1});
      stack.push_back({left, t.begin, mid, t.depth + 1});
    }
    return nodes;
  }

 private:
  double value(std::uint32_t slot, std::size_t f) const { return x_(rows_[slot], f); }

  std::pair<double, bool> stats(std::size_t begin, std::size_t end) const {
    const auto& o = order_[0];
    double sum = 0.0;
    const double first = y_[o[begin]];
    bool uniform = true;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[o[i]];
      sum += v;
      uniform = uniform && v == first;
    }
    return {sum / static_cast<double>(end - begin), uniform};
  }

  std::span<const std::size_t> candidate_features() {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    if (cfg_.max_features <= 0 || static_cast<std::size_t>(cfg_.max_features) >= p_) return features_;
    const auto m = static_cast<std::size_t>(cfg_.max_features);
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, p_ - 1);
      std::swap(features_[i], features_[pick(rng_)]);
    }
    std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(m));
    return {features_.data(), m};
  }

  Split best_split(std::size_t begin, std::size_t end, double mean) {
    const std::size_t n = end - begin;
    double total = 0.0, total_sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double c = y_[order_[0][i]] - mean;
      total += c;
      total_sq += c * c;
    }
    const double parent_sse = total_sq - total * total / static_cast<double>(n);
    // costs within this margin count as ties; the earlier candidate keeps the split
    const double tie = 1e-12 * total_sq;
    Split best;
    for (std::size_t f : candidate_features()) {
      const auto& o = order_[f];
      double left_sum = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        left_sum += y_[o[i]] - mean;
        const double a = value(o[i], f);
        const double b = value(o[i + 1], f);
        if (!(a < b)) continue;
        const auto nl = static_cast<double>(i + 1 - begin);
        const auto nr = static_cast<double>(end - i - 1);
        const double right_sum = total - left_sum;
        const double cost = total_sq - left_sum * left_sum / nl - right_sum * right_sum / nr;
        if (cost < best.cost - tie) {
          double thr = a + (b - a) * 0.5;
          if (!(thr < b)) thr = a;
          best = {static_cast<int>(f), thr, i + 1 - begin, cost};
        }
      }
    }
    if (best.feature < 0 || !(best.cost < parent_sse * (1.0 - 1e-12))) return {};
    return best;
  }

  void partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto f = static_cast<std::size_t>(split.feature);
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t s = order_[f][i];
      goes_left_[s] = value(s, f) <= split.threshold ? 1 : 0;
    }
    for (std::size_t g = 0; g < p_; ++g) {
      auto& o = order_[g];
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t s = o[i];
        if (goes_left_[s]) o[l++] = s;
        else scratch_[r++] = s;
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                o.begin() + static_cast<std::ptrdiff_t>(l));
    }
  }

  const FeatureMatrix& x_;
  const DtrConfig& cfg_;
  std::mt19937_64 rng_;
  std::size_t n_;
  std::size_t p_;
  std::vector<std::uint32_t> rows_;
  std::vector<double> y_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> features_;
};

}  // namespace

DecisionTree dtr_train_rows(const FeatureMatrix& x, std::span<const double> y,
                            std::span<const std::uint32_t> rows, const DtrConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  if (rows.empty()) throw TrainingError("dtr: empty training set");
  if (y.size() != x.rows) throw TrainingError("dtr: feature and target counts differ");
  for (double v : y) {
    if (!std::isfinite(v)) throw TrainingError("dtr: non-finite target");
  }
  Builder builder(x, y, rows, cfg, seed);
  return DecisionTree(builder.build(), x.cols);
}

DecisionTree dtr_train(const FeatureMatrix& x, std::span<const double> y, const DtrConfig& cfg) {
  std::vector<std::uint32_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), 0u);
  return dtr_train_rows(x, y, rows, cfg);
}

}  // namespace plmodel
