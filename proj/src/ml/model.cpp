#include "plmodel/ml/model.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"
#include "plmodel/config_json.hpp"
#include "plmodel/error.hpp"
#include "plmodel/io_util.hpp"

namespace plmodel {

using nlohmann::json;

namespace {
constexpr int kModelVersion = 1;
}

std::string to_string(ModelType t) {
  switch (t) {
    case ModelType::dtr: return "dtr";
    case ModelType::rfr: return "rfr";
    case ModelType::knn: return "knn";
    case ModelType::mlp: return "mlp";
  }
  return "unknown";
}

ModelType parse_model_type(std::string_view name) {
  if (name == "dtr") return ModelType::dtr;
  if (name == "rfr") return ModelType::rfr;
  if (name == "knn") return ModelType::knn;
  if (name == "mlp") return ModelType::mlp;
  throw ValidationError("unknown model type '" + std::string(name) + "' (expected dtr, rfr, knn or mlp)");
}

void ModelSpec::validate() const {
  switch (type) {
    case ModelType::dtr: dtr.validate(); break;
    case ModelType::rfr: rfr.validate(); break;
    case ModelType::knn: knn.validate(); break;
    case ModelType::mlp: mlp.validate(); break;
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw TrainingError("validation_fraction must lie in (0, 1)");
  }
}

double Regressor::predict(std::span<const double> x) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MlpModel>) {
          std::vector<double> q(x.begin(), x.end());
          normalizer->apply_in_place(q);
          return mlp_forward(m, q);
        } else {
          return m.predict(x);
        }
      },
      impl);
}

std::vector<double> Regressor::predict(const FeatureMatrix& x) const {
  if (x.cols != kFeatureCount) {
    throw SchemaError("model: expected " + std::to_string(kFeatureCount) + " features, got " +
                      std::to_string(x.cols));
  }
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MlpModel>) {
          return mlp_predict(m, normalize_apply(*normalizer, x));
        } else {
          return m.predict(x);
        }
      },
      impl);
}

std::vector<double> Regressor::predict(const Dataset& data) const { return predict(feature_matrix(data)); }

Regressor train_model(const ModelSpec& spec, const Dataset& train) {
  spec.validate();
  if (train.empty()) throw TrainingError("training set is empty");
  const FeatureMatrix x = feature_matrix(train);
  const std::vector<double> y = targets(train);
  Regressor r;
  r.spec = spec;
  switch (spec.type) {
    case ModelType::dtr: r.impl = dtr_train(x, y, spec.dtr); break;
    case ModelType::rfr: r.impl = rfr_train(x, y, spec.rfr); break;
    case ModelType::knn: r.impl = knn_fit(x, y, spec.knn); break;
    case ModelType::mlp: {
      r.normalizer = normalize_fit(x);
      MlpModel m = mlp_init(spec.mlp.seed);
      auto [fit, val] = train_test_split(train, spec.validation_fraction, spec.mlp.seed);
      if (val.empty()) {
        r.history = mlp_train(m, normalize_apply(*r.normalizer, x), y, nullptr, {}, spec.mlp);
      } else {
        const FeatureMatrix fx = normalize_apply(*r.normalizer, feature_matrix(fit));
        const FeatureMatrix vx = normalize_apply(*r.normalizer, feature_matrix(val));
        r.history = mlp_train(m, fx, targets(fit), &vx, targets(val), spec.mlp);
      }
      r.impl = std::move(m);
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialization. Parameters are written with 17 significant digits so a
// reload reproduces predictions bit for bit.

namespace {

class Writer {
 public:
  std::string out;

  void raw(std::string_view s) { out += s; }
  void num(double v) {
    if (!std::isfinite(v)) throw ValidationError("model: non-finite parameter cannot be saved");
    append_double(out, v);
  }
  void integer(long long v) { out += std::to_string(v); }

  template <typename Range, typename F>
  void array(const Range& r, F&& each) {
    out.push_back('[');
    bool first = true;
    for (const auto& v : r) {
      if (!first) out.push_back(',');
      first = false;
      each(v);
    }
    out.push_back(']');
  }
  void numbers(std::span<const double> v) { array(v, [&](double d) { num(d); }); }
};

void write_tree(Writer& w, const DecisionTree& t) {
  const auto& nodes = t.nodes();
  w.raw("{\"feature\":");
  w.array(nodes, [&](const TreeNode& n) { w.integer(n.feature); });
  w.raw(",\"threshold\":");
  w.array(nodes, [&](const TreeNode& n) { n.is_leaf() ? w.raw("0") : w.num(n.threshold); });
  w.raw(",\"left\":");
  w.array(nodes, [&](const TreeNode& n) { w.integer(n.left); });
  w.raw(",\"right\":");
  w.array(nodes, [&](const TreeNode& n) { w.integer(n.right); });
  w.raw(",\"value\":");
  w.array(nodes, [&](const TreeNode& n) { n.is_leaf() ? w.num(n.value) : w.raw("0"); });
  w.raw(",\"count\":");
  w.array(nodes, [&](const TreeNode& n) { w.integer(n.count); });
  w.raw("}");
}

DecisionTree read_tree(const json& j, std::size_t n_features) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto count = j.at("count").get<std::vector<std::uint32_t>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || count.size() != n) {
    throw SchemaError("model: tree node arrays differ in length");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i], count[i]};
  return DecisionTree(std::move(nodes), n_features);
}

void write_normalizer(Writer& w, const Normalizer& n) {
  w.raw("{\"min\":");
  w.numbers(n.min);
  w.raw(",\"max\":");
  w.numbers(n.max);
  w.raw("}");
}

Normalizer read_normalizer(const json& j) {
  Normalizer n;
  n.min = j.at("min").get<std::vector<double>>();
  n.max = j.at("max").get<std::vector<double>>();
  if (n.min.size() != kFeatureCount || n.max.size() != kFeatureCount) {
    throw SchemaError("model: normalizer width does not match the feature schema");
  }
  return n;
}

void write_matrix(Writer& w, const Eigen::MatrixXd& m) {
  w.raw("[");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) w.raw(",");
    w.raw("[");
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) w.raw(",");
      w.num(m(i, j));
    }
    w.raw("]");
  }
  w.raw("]");
}

}  // namespace

std::string model_json(const Regressor& model) {
  Writer w;
  w.raw("{\n\"version\":");
  w.integer(kModelVersion);
  w.raw(",\n\"model_type\":\"" + to_string(model.type()) + "\"");
  w.raw(",\n\"features\":" + json(kFeatureNames).dump());
  w.raw(",\n\"hyperparameters\":" + to_json(model.spec).dump());
  w.raw(",\n\"normalizer\":");
  const Normalizer* norm = nullptr;
  if (const auto* knn = std::get_if<KnnModel>(&model.impl)) norm = &knn->normalizer();
  if (model.normalizer) norm = &*model.normalizer;
  if (norm) write_normalizer(w, *norm);
  else w.raw("null");
  w.raw(",\n\"parameters\":");
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          w.raw("{\"tree\":");
          write_tree(w, m);
          w.raw("}");
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          w.raw("{\"trees\":[\n");
          for (std::size_t t = 0; t < m.trees().size(); ++t) {
            if (t) w.raw(",\n");
            write_tree(w, m.trees()[t]);
          }
          w.raw("\n]}");
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          w.raw("{\"rows\":");
          w.integer(static_cast<long long>(m.train_x().rows));
          w.raw(",\"cols\":");
          w.integer(static_cast<long long>(m.train_x().cols));
          w.raw(",\"x\":");
          w.numbers(m.train_x().values);
          w.raw(",\"y\":");
          w.numbers(m.train_y());
          w.raw("}");
        } else {
          w.raw("{\"layers\":[\n");
          for (std::size_t l = 0; l < m.weights.size(); ++l) {
            if (l) w.raw(",\n");
            w.raw("{\"weights\":");
            write_matrix(w, m.weights[l]);
            w.raw(",\"biases\":");
            w.numbers(std::span<const double>(m.biases[l].data(), static_cast<std::size_t>(m.biases[l].size())));
            w.raw("}");
          }
          w.raw("\n]}");
        }
      },
      model.impl);
  if (model.type() == ModelType::mlp) {
    w.raw(",\n\"training\":{\"train_mse\":");
    w.numbers(model.history.train_mse);
    w.raw(",\"validation_mse\":");
    w.numbers(model.history.validation_mse);
    w.raw(model.history.early_stopped ? ",\"early_stopped\":true}" : ",\"early_stopped\":false}");
  }
  w.raw("\n}\n");
  return std::move(w.out);
}

Regressor parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kModelVersion) {
      throw SchemaError("model: unsupported version " + doc.at("version").dump());
    }
    if (doc.at("features").get<std::vector<std::string>>() !=
        std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end())) {
      throw SchemaError("model: feature list does not match this toolkit's schema");
    }
    const ModelType type = parse_model_type(doc.at("model_type").get<std::string>());
    Regressor r;
    r.spec = model_spec_from_json(doc.at("hyperparameters"), type, ModelSpec{});
    const json& p = doc.at("parameters");
    switch (type) {
      case ModelType::dtr: r.impl = read_tree(p.at("tree"), kFeatureCount); break;
      case ModelType::rfr: {
        std::vector<DecisionTree> trees;
        for (const json& t : p.at("trees")) trees.push_back(read_tree(t, kFeatureCount));
        r.impl = RandomForest(std::move(trees));
        break;
      }
      case ModelType::knn: {
        FeatureMatrix x;
        x.rows = p.at("rows").get<std::size_t>();
        x.cols = p.at("cols").get<std::size_t>();
        x.values = p.at("x").get<std::vector<double>>();
        if (x.cols != kFeatureCount || x.values.size() != x.rows * x.cols) {
          throw SchemaError("model: knn matrix shape is inconsistent");
        }
        r.impl = KnnModel(r.spec.knn, read_normalizer(doc.at("normalizer")), std::move(x),
                          p.at("y").get<std::vector<double>>());
        break;
      }
      case ModelType::mlp: {
        r.normalizer = read_normalizer(doc.at("normalizer"));
        MlpModel m;
        m.widths = doc.at("hyperparameters").at("widths").get<std::vector<int>>();
        for (const json& layer : p.at("layers")) {
          const json& wj = layer.at("weights");
          Eigen::MatrixXd wm(static_cast<Eigen::Index>(wj.size()),
                             wj.empty() ? 0 : static_cast<Eigen::Index>(wj[0].size()));
          for (std::size_t i = 0; i < wj.size(); ++i) {
            if (wj[i].size() != static_cast<std::size_t>(wm.cols())) throw SchemaError("model: ragged weight matrix");
            for (std::size_t j = 0; j < wj[i].size(); ++j) {
              wm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wj[i][j].get<double>();
            }
          }
          const auto b = layer.at("biases").get<std::vector<double>>();
          m.weights.push_back(std::move(wm));
          m.biases.push_back(Eigen::Map<const Eigen::RowVectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
        }
        m.validate();
        if (m.widths.front() != static_cast<int>(kFeatureCount)) {
          throw SchemaError("model: mlp input width does not match the feature schema");
        }
        if (doc.contains("training")) {
          const json& t = doc["training"];
          r.history.train_mse = t.at("train_mse").get<std::vector<double>>();
          r.history.validation_mse = t.at("validation_mse").get<std::vector<double>>();
          r.history.early_stopped = t.at("early_stopped").get<bool>();
        }
        r.impl = std::move(m);
        break;
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model: ") + e.what());
  } catch (const ValidationError& e) {
    throw SchemaError(e.what());
  }
}

void save_model(const Regressor& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_json(model));
}

Regressor load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

CvResult cross_validate(const ModelSpec& spec, const Dataset& data, int k, std::uint64_t seed) {
  const auto folds = kfold(data.size(), k, seed);
  CvResult out;
  double rho_sum = 0.0;
  std::size_t rho_n = 0;
  for (const Fold& f : folds) {
    const Dataset train = subset(data, f.train);
    const Dataset hold = subset(data, f.holdout);
    const Regressor model = train_model(spec, train);
    const auto pred = model.predict(hold);
    const auto y = targets(hold);
    out.folds.push_back(metric_row(y, pred));
    const MetricRow& row = out.folds.back();
    out.mean.rmse_db += row.rmse_db;
    out.mean.mape_pct += row.mape_pct;
    out.mean.msle += row.msle;
    if (row.rho) {
      rho_sum += *row.rho;
      ++rho_n;
    }
  }
  const auto n = static_cast<double>(folds.size());
  out.mean.count = data.size();
  out.mean.rmse_db /= n;
  out.mean.mape_pct /= n;
  out.mean.msle /= n;
  if (rho_n) out.mean.rho = rho_sum / static_cast<double>(rho_n);
  return out;
}

}  // namespace plmodel
