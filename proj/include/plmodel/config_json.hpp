#pragma once

#include "json.hpp"
#include "plmodel/dataset.hpp"
#include "plmodel/ml/model.hpp"
#include "plmodel/raysim.hpp"
#include "plmodel/scene.hpp"

namespace plmodel {

// JSON views of configuration structs. Readers start from `base` and
// override only the keys present, so partial documents are accepted.
// Unknown keys throw ValidationError naming the key.

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j, ModelType type, ModelSpec base);

nlohmann::json to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig base);

nlohmann::json to_json(const ReceiverGrid& grid);
ReceiverGrid receiver_grid_from_json(const nlohmann::json& j, ReceiverGrid base);

nlohmann::json to_json(const SweepValues& values);
SweepValues sweep_from_json(const nlohmann::json& j, SweepValues base);

nlohmann::json to_json(const SplitSpec& spec);
SplitSpec split_from_json(const nlohmann::json& j, SplitSpec base);

nlohmann::json to_json(const SceneGenSpec& spec);
SceneGenSpec scene_gen_from_json(const nlohmann::json& j, SceneGenSpec base);

nlohmann::json to_json(const TransmitterSite& site);
TransmitterSite site_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Bounds& b);
Bounds bounds_from_json(const nlohmann::json& j);

std::string to_string(Polarization p);
Polarization parse_polarization(std::string_view name);

}  // namespace plmodel
