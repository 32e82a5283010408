#pragma once

#include <span>
#include <vector>

#include "plmodel/dataset.hpp"

namespace plmodel {

struct KnnConfig {
  int k = 30;

  void validate() const;
};

/// Stores the training normalizer, the normalized training matrix and raw
/// targets. Prediction averages the targets of the k nearest rows under
/// Manhattan distance; equal distances rank by lower training index, and the
/// neighbor targets are summed nearest first.
class KnnModel {
 public:
  KnnModel() = default;
  KnnModel(KnnConfig cfg, Normalizer norm, FeatureMatrix x_normalized, std::vector<double> y);

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;
  std::vector<double> predict_serial(const FeatureMatrix& x) const;

  const KnnConfig& config() const { return cfg_; }
  const Normalizer& normalizer() const { return norm_; }
  const FeatureMatrix& train_x() const { return x_; }
  const std::vector<double>& train_y() const { return y_; }

 private:
  double predict_normalized(std::span<const double> q) const;

  KnnConfig cfg_;
  Normalizer norm_;
  FeatureMatrix x_;
  std::vector<double> y_;
};

// Throws TrainingError when k exceeds the training size.
KnnModel knn_fit(const FeatureMatrix& x, std::span<const double> y, const KnnConfig& cfg);

}  // namespace plmodel
