#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "plmodel/error.hpp"
#include "plmodel/ml/mlp.hpp"

using namespace plmodel;

namespace {

Eigen::MatrixXd unit_inputs(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

Eigen::VectorXd normal_targets(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = g(rng);
  return y;
}

FeatureMatrix to_matrix(const Eigen::MatrixXd& x) {
  FeatureMatrix m(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols()));
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return m;
}

// Plain loops, no Eigen products.
double straight_forward(const MlpModel& m, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const auto& w = m.weights[l];
    std::vector<double> z(static_cast<std::size_t>(w.cols()), 0.0);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      double s = m.biases[l](j);
      for (Eigen::Index i = 0; i < w.rows(); ++i) s += a[static_cast<std::size_t>(i)] * w(i, j);
      const bool hidden = l + 1 < m.weights.size();
      z[static_cast<std::size_t>(j)] = hidden ? 1.0 / (1.0 + std::exp(-s)) : s;
    }
    a = std::move(z);
  }
  return a[0];
}

bool same_params(const MlpModel& a, const MlpModel& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("mlp init") {
  const MlpModel m = mlp_init(42);
  REQUIRE(m.weights.size() == 5);
  const int shapes[5][2] = {{8, 128}, {128, 128}, {128, 64}, {64, 32}, {32, 1}};
  for (std::size_t l = 0; l < 5; ++l) {
    CHECK(m.weights[l].rows() == shapes[l][0]);
    CHECK(m.weights[l].cols() == shapes[l][1]);
    CHECK(m.biases[l].isZero(0.0));
    const double limit = std::sqrt(6.0 / (shapes[l][0] + shapes[l][1]));
    CHECK(m.weights[l].cwiseAbs().maxCoeff() <= limit);
    if (m.weights[l].size() >= 1000) CHECK(m.weights[l].cwiseAbs().maxCoeff() > 0.99 * limit);
  }
  CHECK(m.parameter_count() == 8 * 128 + 128 + 128 * 128 + 128 + 128 * 64 + 64 + 64 * 32 + 32 + 32 + 1);
  CHECK(same_params(m, mlp_init(42)));
  CHECK_FALSE(same_params(m, mlp_init(43)));
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("mlp forward") {
  MlpModel zero = mlp_init(1);
  for (auto& w : zero.weights) w.setZero();
  const std::vector<double> x{0.3, -2, 5, 1, 0, 0.5, 9, -1};
  CHECK(mlp_forward(zero, x) == 0.0);
  zero.biases.back()(0) = 7.25;
  CHECK(mlp_forward(zero, x) == 7.25);

  const MlpModel m = mlp_init(5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> q(8);
    for (double& v : q) v = u(rng);
    CHECK(std::abs(mlp_forward(m, q) - straight_forward(m, q)) < 1e-12);
  }

  const Eigen::MatrixXd batch = unit_inputs(5000, 8, 2);
  const auto pred = mlp_predict(m, to_matrix(batch));
  for (Eigen::Index i = 0; i < batch.rows(); i += 499) {
    std::vector<double> row;
    for (Eigen::Index j = 0; j < 8; ++j) row.push_back(batch(i, j));
    CHECK(std::abs(pred[static_cast<std::size_t>(i)] - straight_forward(m, row)) < 1e-12);
  }

  CHECK_THROWS_AS(mlp_forward(m, std::vector<double>{1.0, 2.0}), SchemaError);
  MlpModel bad = m;
  bad.weights.back()(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(mlp_forward(bad, x), TrainingError);
}

TEST_CASE("backpropagation matches finite differences") {
  const MlpModel m = mlp_init(7);
  const Eigen::MatrixXd x = unit_inputs(64, 8, 8);
  const Eigen::VectorXd y = normal_targets(64, 9);
  const double err = mlp_grad_check(m, x, y, 10, 128);
  CHECK(err < 1e-4);

  SUBCASE("a sign flip on one layer is caught") {
    MlpGradients g;
    mlp_loss(m, x, y, &g);
    g.weights[1] = -g.weights[1];
    CHECK(gradient_check(m, x, y, g, 10, 128) > 0.1);
  }
  SUBCASE("zero-weight model") {
    MlpModel z = m;
    for (auto& w : z.weights) w.setZero();
    MlpGradients g;
    const double loss = mlp_loss(z, x, y, &g);
    CHECK(std::isfinite(loss));
    for (const auto& w : g.weights) CHECK(w.allFinite());
    CHECK(mlp_grad_check(z, x, y, 11, 200) < 1e-4);
  }
  SUBCASE("several seeds") {
    for (std::uint64_t s = 20; s < 24; ++s) {
      const MlpModel r = mlp_init(s);
      CHECK(mlp_grad_check(r, unit_inputs(32, 8, s), normal_targets(32, s + 1), s, 150) < 1e-4);
    }
  }
}

TEST_CASE("mlp training") {
  const Eigen::MatrixXd x = unit_inputs(300, 8, 30);
  Eigen::VectorXd y(300);
  for (Eigen::Index i = 0; i < 300; ++i) y(i) = 2.0 * x(i, 0) - x(i, 3) + 0.5;
  const FeatureMatrix fx = to_matrix(x);
  const std::vector<double> fy(y.data(), y.data() + y.size());

  SUBCASE("zero learning rate leaves parameters unchanged") {
    MlpModel m = mlp_init(1);
    const MlpModel before = m;
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    const TrainHistory h = mlp_train(m, fx, fy, nullptr, {}, cfg);
    CHECK(h.train_mse.size() == 5);
    CHECK(same_params(m, before));
  }
  SUBCASE("history length and determinism") {
    MlpModel a = mlp_init(2), b = mlp_init(2);
    TrainConfig cfg;
    cfg.epochs = 7;
    cfg.batch_size = 32;
    const FeatureMatrix vx = to_matrix(unit_inputs(20, 8, 31));
    const std::vector<double> vy(20, 0.5);
    const TrainHistory ha = mlp_train(a, fx, fy, &vx, vy, cfg);
    const TrainHistory hb = mlp_train(b, fx, fy, &vx, vy, cfg);
    CHECK(ha.train_mse.size() == 7);
    CHECK(ha.validation_mse.size() == 7);
    CHECK(ha.train_mse == hb.train_mse);
    CHECK(same_params(a, b));
    CHECK(ha.train_mse.back() < ha.train_mse.front());
  }
  SUBCASE("single sample is memorized") {
    MlpModel m = mlp_init(3);
    FeatureMatrix one(1, 8);
    for (std::size_t j = 0; j < 8; ++j) one(0, j) = 0.1 * static_cast<double>(j);
    const std::vector<double> target{2.0};
    TrainConfig cfg;
    cfg.epochs = 500;
    const TrainHistory h = mlp_train(m, one, target, nullptr, {}, cfg);
    CHECK(h.train_mse.size() == 500);
    const double final_err = mlp_forward(m, one.row(0)) - 2.0;
    CHECK(final_err * final_err < 1e-4);
  }
  SUBCASE("early stopping keeps the best parameters") {
    MlpModel m = mlp_init(4);
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 16;
    cfg.patience = 3;
    const FeatureMatrix vx = to_matrix(unit_inputs(50, 8, 32));
    const std::vector<double> vy = [] {
      const auto v = normal_targets(50, 33);
      return std::vector<double>(v.data(), v.data() + v.size());
    }();
    const TrainHistory h = mlp_train(m, fx, fy, &vx, vy, cfg);
    CHECK(h.early_stopped);
    CHECK(h.validation_mse.size() < 400);
    const Eigen::Map<const Eigen::VectorXd> vye(vy.data(), 50);
    const double best = *std::min_element(h.validation_mse.begin(), h.validation_mse.end());
    CHECK(mlp_loss(m, to_eigen(vx), vye) == best);
  }
  SUBCASE("invalid configuration") {
    MlpModel m = mlp_init(1);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(mlp_train(m, fx, fy, nullptr, {}, cfg), TrainingError);
    cfg.epochs = 1;
    cfg.patience = 2;
    CHECK_THROWS_AS(mlp_train(m, fx, fy, nullptr, {}, cfg), TrainingError);
  }
}
