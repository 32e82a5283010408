#include "plmodel/config_json.hpp"

#include <initializer_list>
#include <string>

#include "plmodel/error.hpp"

namespace plmodel {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(what) + ": expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ValidationError(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const char* what) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(what) + "." + key + ": wrong type");
  }
}

void read_opt_int(const json& j, const char* key, std::optional<int>& out, const char* what) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  int v = 0;
  read(j, key, v, what);
  out = v;
}

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string to_string(Polarization p) {
  switch (p) {
    case Polarization::perpendicular: return "perpendicular";
    case Polarization::parallel: return "parallel";
    case Polarization::surface_dependent: return "surface_dependent";
  }
  return "unknown";
}

Polarization parse_polarization(std::string_view name) {
  if (name == "perpendicular") return Polarization::perpendicular;
  if (name == "parallel") return Polarization::parallel;
  if (name == "surface_dependent") return Polarization::surface_dependent;
  throw ValidationError("unknown polarization '" + std::string(name) + "'");
}

json to_json(const ModelSpec& s) {
  switch (s.type) {
    case ModelType::dtr:
      return {{"max_depth", opt_int(s.dtr.max_depth)},
              {"min_samples_split", s.dtr.min_samples_split},
              {"max_features", s.dtr.max_features},
              {"criterion", "mse"}};
    case ModelType::rfr:
      return {{"n_estimators", s.rfr.n_estimators},
              {"max_depth", opt_int(s.rfr.max_depth)},
              {"min_samples_split", s.rfr.min_samples_split},
              {"bootstrap", s.rfr.bootstrap},
              {"feature_subsampling", s.rfr.feature_subsampling},
              {"seed", s.rfr.seed}};
    case ModelType::knn: return {{"k", s.knn.k}, {"metric", "manhattan"}};
    case ModelType::mlp:
      return {{"widths", kMlpWidths},
              {"hidden_activation", "sigmoid"},
              {"output_activation", "linear"},
              {"optimizer", "adam"},
              {"learning_rate", s.mlp.learning_rate},
              {"epochs", s.mlp.epochs},
              {"beta1", s.mlp.beta1},
              {"beta2", s.mlp.beta2},
              {"epsilon", s.mlp.epsilon},
              {"batch_size", s.mlp.batch_size},
              {"loss", "mse"},
              {"seed", s.mlp.seed},
              {"patience", opt_int(s.mlp.patience)},
              {"validation_fraction", s.validation_fraction}};
  }
  return {};
}

ModelSpec model_spec_from_json(const json& j, ModelType type, ModelSpec s) {
  s.type = type;
  switch (type) {
    case ModelType::dtr:
      check_keys(j, "dtr", {"max_depth", "min_samples_split", "max_features", "criterion"});
      read_opt_int(j, "max_depth", s.dtr.max_depth, "dtr");
      read(j, "min_samples_split", s.dtr.min_samples_split, "dtr");
      read(j, "max_features", s.dtr.max_features, "dtr");
      break;
    case ModelType::rfr:
      check_keys(j, "rfr", {"n_estimators", "max_depth", "min_samples_split", "bootstrap",
                            "feature_subsampling", "seed"});
      read(j, "n_estimators", s.rfr.n_estimators, "rfr");
      read_opt_int(j, "max_depth", s.rfr.max_depth, "rfr");
      read(j, "min_samples_split", s.rfr.min_samples_split, "rfr");
      read(j, "bootstrap", s.rfr.bootstrap, "rfr");
      read(j, "feature_subsampling", s.rfr.feature_subsampling, "rfr");
      read(j, "seed", s.rfr.seed, "rfr");
      break;
    case ModelType::knn:
      check_keys(j, "knn", {"k", "metric"});
      read(j, "k", s.knn.k, "knn");
      if (j.contains("metric") && j["metric"] != "manhattan") {
        throw ValidationError("knn.metric: only 'manhattan' is supported");
      }
      break;
    case ModelType::mlp: {
      check_keys(j, "mlp", {"widths", "hidden_activation", "output_activation", "optimizer",
                            "learning_rate", "epochs", "beta1", "beta2", "epsilon", "batch_size",
                            "loss", "seed", "patience", "validation_fraction"});
      if (j.contains("widths") && j["widths"] != json(kMlpWidths)) {
        throw ValidationError("mlp.widths: the layer layout is fixed at [8,128,128,64,32,1]");
      }
      read(j, "learning_rate", s.mlp.learning_rate, "mlp");
      read(j, "epochs", s.mlp.epochs, "mlp");
      read(j, "beta1", s.mlp.beta1, "mlp");
      read(j, "beta2", s.mlp.beta2, "mlp");
      read(j, "epsilon", s.mlp.epsilon, "mlp");
      read(j, "batch_size", s.mlp.batch_size, "mlp");
      read(j, "seed", s.mlp.seed, "mlp");
      read_opt_int(j, "patience", s.mlp.patience, "mlp");
      read(j, "validation_fraction", s.validation_fraction, "mlp");
      break;
    }
  }
  return s;
}

json to_json(const SimConfig& c) {
  return {{"max_reflections", c.max_reflections},
          {"max_wall_reflections", c.max_wall_reflections},
          {"reflection_limit", c.reflection_limit},
          {"frequency_ghz", c.frequency_ghz},
          {"max_distance_m", c.max_distance_m},
          {"polarization", to_string(c.polarization)}};
}

SimConfig sim_config_from_json(const json& j, SimConfig c) {
  check_keys(j, "sim", {"max_reflections", "max_wall_reflections", "reflection_limit",
                        "frequency_ghz", "max_distance_m", "polarization"});
  read(j, "max_reflections", c.max_reflections, "sim");
  read(j, "max_wall_reflections", c.max_wall_reflections, "sim");
  read(j, "reflection_limit", c.reflection_limit, "sim");
  read(j, "frequency_ghz", c.frequency_ghz, "sim");
  read(j, "max_distance_m", c.max_distance_m, "sim");
  if (j.contains("polarization")) c.polarization = parse_polarization(j["polarization"].get<std::string>());
  return c;
}

json to_json(const Bounds& b) {
  return {{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y}};
}

Bounds bounds_from_json(const json& j) {
  check_keys(j, "bounds", {"min_x", "min_y", "max_x", "max_y"});
  Bounds b;
  for (const char* k : {"min_x", "min_y", "max_x", "max_y"}) {
    if (!j.contains(k)) throw ValidationError(std::string("bounds: missing '") + k + "'");
  }
  read(j, "min_x", b.min_x, "bounds");
  read(j, "min_y", b.min_y, "bounds");
  read(j, "max_x", b.max_x, "bounds");
  read(j, "max_y", b.max_y, "bounds");
  return b;
}

json to_json(const ReceiverGrid& g) {
  return {{"extent", to_json(g.extent)},
          {"spacing_m", g.spacing},
          {"rx_height_m", g.rx_height},
          {"rx_gain_dbi", g.rx_gain_dbi},
          {"max_distance_m", g.max_distance}};
}

ReceiverGrid receiver_grid_from_json(const json& j, ReceiverGrid g) {
  check_keys(j, "grid", {"extent", "spacing_m", "rx_height_m", "rx_gain_dbi", "max_distance_m"});
  if (j.contains("extent")) g.extent = bounds_from_json(j["extent"]);
  read(j, "spacing_m", g.spacing, "grid");
  read(j, "rx_height_m", g.rx_height, "grid");
  read(j, "rx_gain_dbi", g.rx_gain_dbi, "grid");
  read(j, "max_distance_m", g.max_distance, "grid");
  return g;
}

json to_json(const SweepValues& v) {
  return {{"f_ghz", v.f_ghz}, {"h_tx_m", v.h_tx_m}, {"p_tx_w", v.p_tx_w}};
}

SweepValues sweep_from_json(const json& j, SweepValues v) {
  check_keys(j, "sweep", {"f_ghz", "h_tx_m", "p_tx_w"});
  read(j, "f_ghz", v.f_ghz, "sweep");
  read(j, "h_tx_m", v.h_tx_m, "sweep");
  read(j, "p_tx_w", v.p_tx_w, "sweep");
  return v;
}

json to_json(const SplitSpec& s) {
  return {{"test_fraction", s.test_fraction},
          {"validation_fraction_of_train", s.validation_fraction_of_train},
          {"k", s.k},
          {"seed", s.seed}};
}

SplitSpec split_from_json(const json& j, SplitSpec s) {
  check_keys(j, "split", {"test_fraction", "validation_fraction_of_train", "k", "seed"});
  read(j, "test_fraction", s.test_fraction, "split");
  read(j, "validation_fraction_of_train", s.validation_fraction_of_train, "split");
  read(j, "k", s.k, "split");
  read(j, "seed", s.seed, "split");
  return s;
}

json to_json(const SceneGenSpec& s) {
  return {{"bounds", to_json(s.bounds)},
          {"anchor", {{"lat", s.anchor.lat_deg}, {"lon", s.anchor.lon_deg}}},
          {"buildings", s.buildings},
          {"campus_fraction", s.campus_fraction},
          {"house_size_min", s.house_size_min},
          {"house_size_max", s.house_size_max},
          {"house_height_min", s.house_height_min},
          {"house_height_max", s.house_height_max},
          {"campus_size_min", s.campus_size_min},
          {"campus_size_max", s.campus_size_max},
          {"campus_height_min", s.campus_height_min},
          {"campus_height_max", s.campus_height_max},
          {"min_gap", s.min_gap},
          {"max_attempts_per_building", s.max_attempts_per_building}};
}

SceneGenSpec scene_gen_from_json(const json& j, SceneGenSpec s) {
  check_keys(j, "scene.generate",
             {"bounds", "anchor", "buildings", "campus_fraction", "house_size_min", "house_size_max",
              "house_height_min", "house_height_max", "campus_size_min", "campus_size_max",
              "campus_height_min", "campus_height_max", "min_gap", "max_attempts_per_building"});
  if (j.contains("bounds")) s.bounds = bounds_from_json(j["bounds"]);
  if (j.contains("anchor")) {
    const json& a = j["anchor"];
    check_keys(a, "scene.generate.anchor", {"lat", "lon"});
    read(a, "lat", s.anchor.lat_deg, "anchor");
    read(a, "lon", s.anchor.lon_deg, "anchor");
  }
  read(j, "buildings", s.buildings, "scene.generate");
  read(j, "campus_fraction", s.campus_fraction, "scene.generate");
  read(j, "house_size_min", s.house_size_min, "scene.generate");
  read(j, "house_size_max", s.house_size_max, "scene.generate");
  read(j, "house_height_min", s.house_height_min, "scene.generate");
  read(j, "house_height_max", s.house_height_max, "scene.generate");
  read(j, "campus_size_min", s.campus_size_min, "scene.generate");
  read(j, "campus_size_max", s.campus_size_max, "scene.generate");
  read(j, "campus_height_min", s.campus_height_min, "scene.generate");
  read(j, "campus_height_max", s.campus_height_max, "scene.generate");
  read(j, "min_gap", s.min_gap, "scene.generate");
  read(j, "max_attempts_per_building", s.max_attempts_per_building, "scene.generate");
  return s;
}

json to_json(const TransmitterSite& s) {
  return {{"name", s.name},
          {"x", s.position.x},
          {"y", s.position.y},
          {"height_agl_m", s.height_agl},
          {"power_w", s.power_w},
          {"gain_dbi", s.gain_dbi}};
}

TransmitterSite site_from_json(const json& j) {
  check_keys(j, "site", {"name", "x", "y", "height_agl_m", "power_w", "gain_dbi"});
  TransmitterSite s;
  for (const char* k : {"name", "x", "y"}) {
    if (!j.contains(k)) throw ValidationError(std::string("site: missing '") + k + "'");
  }
  read(j, "name", s.name, "site");
  read(j, "x", s.position.x, "site");
  read(j, "y", s.position.y, "site");
  read(j, "height_agl_m", s.height_agl, "site");
  read(j, "power_w", s.power_w, "site");
  read(j, "gain_dbi", s.gain_dbi, "site");
  s.validate();
  return s;
}

}  // namespace plmodel
