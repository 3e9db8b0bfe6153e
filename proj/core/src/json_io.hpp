#pragma once

// Internal JSON conversion helpers shared across translation units.
// Not installed; keeps nlohmann out of the public headers.

#include "memfit/features.hpp"

#include <nlohmann/json.hpp>

namespace memfit::detail {

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json_obj(const nlohmann::json& j);

nlohmann::json encoder_to_json(const EncoderState& state);
EncoderState encoder_from_json_obj(const nlohmann::json& j);

} // namespace memfit::detail
