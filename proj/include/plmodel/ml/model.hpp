#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "plmodel/dataset.hpp"
#include "plmodel/metrics.hpp"
#include "plmodel/ml/forest.hpp"
#include "plmodel/ml/knn.hpp"
#include "plmodel/ml/mlp.hpp"
#include "plmodel/ml/tree.hpp"

namespace plmodel {

enum class ModelType { dtr, rfr, knn, mlp };

std::string to_string(ModelType t);
// Throws ValidationError on an unknown name.
ModelType parse_model_type(std::string_view name);

struct ModelSpec {
  ModelType type = ModelType::dtr;
  DtrConfig dtr;
  RfrConfig rfr;
  KnnConfig knn;
  TrainConfig mlp;
  // Share of the training set held back for MLP validation loss.
  double validation_fraction = 0.15;

  void validate() const;
};

/// A trained model of any supported type. Trees consume raw features; KNN
/// carries its own normalizer; the MLP sees features scaled by `normalizer`.
struct Regressor {
  ModelSpec spec;
  std::variant<DecisionTree, RandomForest, KnnModel, MlpModel> impl;
  std::optional<Normalizer> normalizer;
  TrainHistory history;

  ModelType type() const { return spec.type; }
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;
  std::vector<double> predict(const Dataset& data) const;
};

// Throws TrainingError on invalid hyperparameters, an empty set or divergence.
Regressor train_model(const ModelSpec& spec, const Dataset& train);

std::string model_json(const Regressor& model);
Regressor parse_model(std::string_view text);
void save_model(const Regressor& model, const std::filesystem::path& path);
Regressor load_model(const std::filesystem::path& path);

struct CvResult {
  std::vector<MetricRow> folds;
  MetricRow mean;  // arithmetic mean of the fold rows; count is the dataset size
};

CvResult cross_validate(const ModelSpec& spec, const Dataset& data, int k, std::uint64_t seed);

}  // namespace plmodel
