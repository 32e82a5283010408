#include "plmodel/ml/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "plmodel/error.hpp"

namespace plmodel {

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

void MlpModel::validate() const {
  if (widths.size() < 2) throw ValidationError("mlp: needs at least an input and an output layer");
  if (widths.back() != 1) throw ValidationError("mlp: output width must be 1");
  if (weights.size() != widths.size() - 1 || biases.size() != weights.size()) {
    throw ValidationError("mlp: layer count does not match widths");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != widths[l] || weights[l].cols() != widths[l + 1] ||
        biases[l].size() != widths[l + 1]) {
      throw ValidationError("mlp: layer " + std::to_string(l) + " has the wrong shape");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw ValidationError("mlp: layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
}

MlpModel mlp_init(std::uint64_t seed, const std::vector<int>& widths) {
  if (widths.size() < 2) throw ValidationError("mlp: needs at least an input and an output layer");
  for (int w : widths) {
    if (w < 1) throw ValidationError("mlp: layer widths must be positive");
  }
  MlpModel m;
  m.widths = widths;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(widths[l], widths[l + 1]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::RowVectorXd::Zero(widths[l + 1]));
  }
  return m;
}

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// activations[0] = x; activations[l+1] = output of layer l.
std::vector<Eigen::MatrixXd> forward_all(const MlpModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.widths.front()) {
    throw SchemaError("mlp: expected " + std::to_string(model.widths.front()) + " features, got " +
                      std::to_string(x.cols()));
  }
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.weights.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * model.weights[l];
    z.rowwise() += model.biases[l];
    const bool output = l + 1 == model.weights.size();
    acts.push_back(output ? std::move(z) : sigmoid(z));
    if (!acts.back().allFinite()) {
      throw TrainingError("mlp: non-finite activation in layer " + std::to_string(l) +
                          " (diverged parameters)");
    }
  }
  return acts;
}

}  // namespace

Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& x) {
  return forward_all(model, x).back().col(0);
}

double mlp_forward(const MlpModel& model, std::span<const double> x) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  return mlp_forward(model, row)(0);
}

Eigen::MatrixXd to_eigen(const FeatureMatrix& x) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(x.cols));
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j);
    }
  }
  return m;
}

std::vector<double> mlp_predict(const MlpModel& model, const FeatureMatrix& x) {
  std::vector<double> out(x.rows);
  constexpr std::size_t kChunk = 4096;
  for (std::size_t start = 0; start < x.rows; start += kChunk) {
    const std::size_t n = std::min(kChunk, x.rows - start);
    Eigen::MatrixXd block(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x.cols));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < x.cols; ++j) {
        block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(start + i, j);
      }
    }
    const Eigen::VectorXd y = mlp_forward(model, block);
    for (std::size_t i = 0; i < n; ++i) out[start + i] = y(static_cast<Eigen::Index>(i));
  }
  return out;
}

double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                MlpGradients* grads) {
  if (x.rows() != y.size()) throw ValidationError("mlp: feature and target counts differ");
  if (x.rows() == 0) throw ValidationError("mlp: empty batch");
  const auto acts = forward_all(model, x);
  const Eigen::VectorXd err = acts.back().col(0) - y;
  const double n = static_cast<double>(x.rows());
  const double loss = err.squaredNorm() / n;
  if (!grads) return loss;

  const std::size_t layers = model.weights.size();
  grads->weights.resize(layers);
  grads->biases.resize(layers);
  Eigen::MatrixXd delta = (2.0 / n) * err;
  for (std::size_t l = layers; l-- > 0;) {
    grads->weights[l] = acts[l].transpose() * delta;
    grads->biases[l] = delta.colwise().sum();
    if (l == 0) break;
    const Eigen::MatrixXd& a = acts[l];
    delta = (delta * model.weights[l].transpose()).cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
  }
  return loss;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw TrainingError("mlp: learning_rate must be finite and >= 0");
  }
  if (epochs < 1) throw TrainingError("mlp: epochs must be >= 1");
  if (batch_size < 1) throw TrainingError("mlp: batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw TrainingError("mlp: Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw TrainingError("mlp: epsilon must be > 0");
  if (patience && *patience < 1) throw TrainingError("mlp: patience must be >= 1");
}

namespace {

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::RowVectorXd> mb, vb;
  long step = 0;

  explicit AdamState(const MlpModel& m) {
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      mw.push_back(Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
      vw.push_back(mw.back());
      mb.push_back(Eigen::RowVectorXd::Zero(m.biases[l].size()));
      vb.push_back(mb.back());
    }
  }
};

template <typename P>
void adam_update(P& param, P& m, P& v, const P& g, const TrainConfig& cfg, double c1, double c2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
}

}  // namespace

TrainHistory mlp_train(MlpModel& model, const FeatureMatrix& train_x, std::span<const double> train_y,
                       const FeatureMatrix* val_x, std::span<const double> val_y,
                       const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  if (train_x.rows == 0) throw TrainingError("mlp: empty training set");
  if (train_y.size() != train_x.rows) throw TrainingError("mlp: feature and target counts differ");
  if (val_x && (val_x->rows != val_y.size() || val_x->rows == 0)) {
    throw TrainingError("mlp: validation features and targets disagree or are empty");
  }
  if (cfg.patience && !val_x) throw TrainingError("mlp: early stopping needs a validation set");

  const Eigen::MatrixXd x = to_eigen(train_x);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(train_y.data(), static_cast<Eigen::Index>(train_y.size()));
  Eigen::MatrixXd vx;
  Eigen::VectorXd vy;
  if (val_x) {
    vx = to_eigen(*val_x);
    vy = Eigen::Map<const Eigen::VectorXd>(val_y.data(), static_cast<Eigen::Index>(val_y.size()));
  }

  const auto n = static_cast<std::size_t>(x.rows());
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.seed);
  AdamState adam(model);
  MlpGradients g;
  TrainHistory history;
  double best_val = std::numeric_limits<double>::infinity();
  MlpModel best = model;
  int since_best = 0;

  Eigen::MatrixXd bx;
  Eigen::VectorXd by;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      bx.resize(static_cast<Eigen::Index>(m), x.cols());
      by.resize(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        bx.row(static_cast<Eigen::Index>(i)) = x.row(order[start + i]);
        by(static_cast<Eigen::Index>(i)) = y(order[start + i]);
      }
      const double loss = mlp_loss(model, bx, by, &g);
      if (!std::isfinite(loss)) {
        throw TrainingError("mlp: non-finite loss at epoch " + std::to_string(epoch + 1) +
                            ", batch starting at row " + std::to_string(start));
      }
      weighted += loss * static_cast<double>(m);
      ++adam.step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        adam_update(model.weights[l], adam.mw[l], adam.vw[l], g.weights[l], cfg, c1, c2);
        adam_update(model.biases[l], adam.mb[l], adam.vb[l], g.biases[l], cfg, c1, c2);
      }
    }
    history.train_mse.push_back(weighted / static_cast<double>(n));
    if (val_x) {
      const double v = mlp_loss(model, vx, vy);
      history.validation_mse.push_back(v);
      if (cfg.patience) {
        if (v < best_val) {
          best_val = v;
          best = model;
          since_best = 0;
        } else if (++since_best >= *cfg.patience) {
          model = std::move(best);
          history.early_stopped = true;
          break;
        }
      }
    }
  }
  return history;
}

namespace {

double& parameter_ref(MlpModel& m, std::size_t flat) {
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(m.weights[l].size());
    if (flat < nw) return m.weights[l].data()[flat];
    flat -= nw;
    const auto nb = static_cast<std::size_t>(m.biases[l].size());
    if (flat < nb) return m.biases[l].data()[flat];
    flat -= nb;
  }
  throw std::out_of_range("mlp: parameter index out of range");
}

double gradient_at(const MlpGradients& g, std::size_t flat) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(g.weights[l].size());
    if (flat < nw) return g.weights[l].data()[flat];
    flat -= nw;
    const auto nb = static_cast<std::size_t>(g.biases[l].size());
    if (flat < nb) return g.biases[l].data()[flat];
    flat -= nb;
  }
  throw std::out_of_range("mlp: gradient index out of range");
}

}  // namespace

double gradient_check(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const MlpGradients& analytic, std::uint64_t seed, std::size_t count) {
  constexpr double kStep = 1e-6;
  const std::size_t total = model.parameter_count();
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, total));

  MlpModel probe = model;
  double worst = 0.0;
  for (std::size_t k : idx) {
    double& p = parameter_ref(probe, k);
    const double saved = p;
    p = saved + kStep;
    const double up = mlp_loss(probe, x, y);
    p = saved - kStep;
    const double down = mlp_loss(probe, x, y);
    p = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double a = gradient_at(analytic, k);
    const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-12);
    worst = std::max(worst, rel);
  }
  return worst;
}

double mlp_grad_check(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      std::uint64_t seed, std::size_t count) {
  MlpGradients g;
  mlp_loss(model, x, y, &g);
  return gradient_check(model, x, y, g, seed, count);
}

}  // namespace plmodel
