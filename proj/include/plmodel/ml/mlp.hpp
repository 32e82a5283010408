#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "plmodel/dataset.hpp"

namespace plmodel {

inline const std::vector<int> kMlpWidths{8, 128, 128, 64, 32, 1};

/// Fully connected regressor: sigmoid on every hidden layer, identity on the
/// output. weights[l] is fan_in x fan_out, so a layer computes a W + b.
struct MlpModel {
  std::vector<int> widths;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
  void validate() const;
};

// Glorot-uniform weights, zero biases.
MlpModel mlp_init(std::uint64_t seed, const std::vector<int>& widths = kMlpWidths);

// Throws TrainingError on a non-finite intermediate.
double mlp_forward(const MlpModel& model, std::span<const double> x);
// One row per sample.
Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& x);
std::vector<double> mlp_predict(const MlpModel& model, const FeatureMatrix& x);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::RowVectorXd> biases;
};

// Mean squared error over the batch; fills grads when non-null.
double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                MlpGradients* grads = nullptr);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 256;
  std::uint64_t seed = 42;
  std::optional<int> patience;  // early stop on validation loss; off when empty

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_mse;
  std::vector<double> validation_mse;  // empty without a validation set
  bool early_stopped = false;
};

/// Mini-batch Adam on MSE. Rows are reshuffled each epoch from one RNG
/// seeded by cfg.seed; the recorded training loss is the sample-weighted mean
/// of the batch losses. With patience set, training stops after that many
/// epochs without validation improvement and the best parameters are kept.
TrainHistory mlp_train(MlpModel& model, const FeatureMatrix& train_x, std::span<const double> train_y,
                       const FeatureMatrix* val_x, std::span<const double> val_y,
                       const TrainConfig& cfg);

// Max relative error between `analytic` and central differences (step 1e-6)
// on `count` parameters drawn by `seed`.
double gradient_check(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const MlpGradients& analytic, std::uint64_t seed, std::size_t count = 128);
double mlp_grad_check(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::uint64_t seed, std::size_t count = 128);

Eigen::MatrixXd to_eigen(const FeatureMatrix& x);

}  // namespace plmodel
