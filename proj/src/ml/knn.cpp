#include "plmodel/ml/knn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "plmodel/error.hpp"

namespace plmodel {

void KnnConfig::validate() const {
  if (k < 1) throw TrainingError("knn: k must be >= 1");
}

KnnModel::KnnModel(KnnConfig cfg, Normalizer norm, FeatureMatrix x_normalized, std::vector<double> y)
    : cfg_(cfg), norm_(std::move(norm)), x_(std::move(x_normalized)), y_(std::move(y)) {
  cfg_.validate();
  if (y_.size() != x_.rows) throw ValidationError("knn: feature and target counts differ");
  if (norm_.size() != x_.cols) throw ValidationError("knn: normalizer width differs from features");
  if (static_cast<std::size_t>(cfg_.k) > x_.rows) {
    throw TrainingError("knn: k exceeds training size (" + std::to_string(cfg_.k) + " > " +
                        std::to_string(x_.rows) + ")");
  }
}

double KnnModel::predict_normalized(std::span<const double> q) const {
  using Entry = std::pair<double, std::size_t>;
  const auto k = static_cast<std::size_t>(cfg_.k);
  std::priority_queue<Entry> heap;
  for (std::size_t j = 0; j < x_.rows; ++j) {
    const auto row = x_.row(j);
    const bool full = heap.size() == k;
    const double bound = full ? heap.top().first : 0.0;
    double d = 0.0;
    bool pruned = false;
    for (std::size_t f = 0; f < row.size(); ++f) {
      d += std::abs(row[f] - q[f]);
      if (full && d >= bound) {
        pruned = true;
        break;
      }
    }
    if (pruned) continue;
    if (full) heap.pop();
    heap.emplace(d, j);
  }
  std::vector<Entry> nearest;
  nearest.reserve(k);
  while (!heap.empty()) {
    nearest.push_back(heap.top());
    heap.pop();
  }
  std::reverse(nearest.begin(), nearest.end());
  double sum = 0.0;
  for (const Entry& e : nearest) sum += y_[e.second];
  return sum / static_cast<double>(k);
}

double KnnModel::predict(std::span<const double> x) const {
  if (x.size() != x_.cols) {
    throw SchemaError("knn: expected " + std::to_string(x_.cols) + " features, got " +
                      std::to_string(x.size()));
  }
  std::vector<double> q(x.begin(), x.end());
  norm_.apply_in_place(q);
  return predict_normalized(q);
}

std::vector<double> KnnModel::predict(const FeatureMatrix& x) const {
  if (x.cols != x_.cols) {
    throw SchemaError("knn: expected " + std::to_string(x_.cols) + " features, got " +
                      std::to_string(x.cols));
  }
  const FeatureMatrix q = normalize_apply(norm_, x);
  std::vector<double> out(x.rows);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < q.rows; ++i) out[i] = predict_normalized(q.row(i));
  return out;
}

std::vector<double> KnnModel::predict_serial(const FeatureMatrix& x) const {
  std::vector<double> out;
  out.reserve(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out.push_back(predict(x.row(i)));
  return out;
}

KnnModel knn_fit(const FeatureMatrix& x, std::span<const double> y, const KnnConfig& cfg) {
  cfg.validate();
  if (x.rows == 0) throw TrainingError("knn: empty training set");
  if (static_cast<std::size_t>(cfg.k) > x.rows) {
    throw TrainingError("knn: k exceeds training size (" + std::to_string(cfg.k) + " > " +
                        std::to_string(x.rows) + ")");
  }
  Normalizer norm = normalize_fit(x);
  FeatureMatrix xn = normalize_apply(norm, x);
  return KnnModel(cfg, std::move(norm), std::move(xn), std::vector<double>(y.begin(), y.end()));
}

}  // namespace plmodel
