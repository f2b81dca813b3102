#pragma once

#include <filesystem>

#include "json.hpp"
#include "tastenet/choice.hpp"
#include "tastenet/data.hpp"
#include "tastenet/estimation.hpp"
#include "tastenet/nn.hpp"
#include "tastenet/synth.hpp"

// JSON forms of the declarative configuration. Every *_from_json throws
// ErrorKind::config with the offending key on malformed input.
//
// Utility grammar:
//   {"parameters": ["asc_1", ...],          optional, fixes slot order
//    "alternatives": [
//      {"alternative": "1",
//       "terms": [
//         {"coef": "param:asc_1"},                       constant (ASC)
//         {"coef": "fixed:-1", "attribute": "cost"},
//         {"coef": "net:0", "attribute": "time"},
//         {"coef": "param:b", "attribute": "time", "interact": ["inc", "full"]},
//         {"coef": "param:tt", "attribute": "time", "by": ["age", "*"], "base": true},
//         {"coef": "random", "attribute": "time"}]}],
//    "random": {"mean": [{"coef": "param:b_time", "interact": []}],
//               "log_sigma": "log_sigma", "draws": 200}}
// "by" expands one term per characteristic column (a categorical variable
// name stands for all of its one-hot columns, "*" for every column); each
// expanded term gets the coefficient "<name>*<column>". "base" (default
// true) keeps the unexpanded term as well.

namespace tastenet {

nlohmann::json read_json_file(const std::filesystem::path& path);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& doc);

nlohmann::json utility_to_json(const UtilitySpec& spec, const FeatureSchema& schema);
UtilitySpec utility_from_json(const nlohmann::json& doc, const FeatureSchema& schema);

nlohmann::json mlp_spec_to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const nlohmann::json& doc);

nlohmann::json schema_config_to_json(const SchemaConfig& config);
SchemaConfig schema_config_from_json(const nlohmann::json& doc);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
/// Missing keys keep the defaults in `base`.
TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig base = {});

nlohmann::json gen_config_to_json(const synth::GenConfig& cfg);
synth::GenConfig gen_config_from_json(const nlohmann::json& doc, synth::GenConfig base = {});

nlohmann::json true_params_to_json(const synth::TrueTasteParams& params);
synth::TrueTasteParams true_params_from_json(const nlohmann::json& doc);

nlohmann::json search_space_to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const nlohmann::json& doc);

}  // namespace tastenet
