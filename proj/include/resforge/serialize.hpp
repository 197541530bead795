#pragma once

#include <json.hpp>

#include "resforge/fit.hpp"
#include "resforge/synth.hpp"
#include "resforge/trace.hpp"
#include "resforge/types.hpp"

namespace resforge {

using json = nlohmann::ordered_json;

json to_json(const EnvironmentParams&);
json to_json(const ResonanceParams&);
json to_json(const KerrModelParams&);
json to_json(const LossModelParams&);
json to_json(const FilmProperties&);
json to_json(const ResonatorGeometry&);
json to_json(const FieldBehavior&);
json to_json(const GeneratorTruth&);
json to_json(const NoiseSpec&);
json to_json(const FitResult&);
json to_json(const FieldSweepSeries&);
json to_json(const PowerScan&);

EnvironmentParams environment_from_json(const json&);
ResonanceParams resonance_from_json(const json&);
KerrModelParams kerr_from_json(const json&);
LossModelParams loss_from_json(const json&);
FilmProperties film_from_json(const json&);
ResonatorGeometry geometry_from_json(const json&);
FieldBehavior field_behavior_from_json(const json&);
GeneratorTruth truth_from_json(const json&);
NoiseSpec noise_from_json(const json&);
FieldSweepSeries field_sweep_from_json(const json&);

/// Throws InvalidParameter when `object` holds a key outside `allowed`.
void reject_unknown_keys(const json& object, const std::vector<std::string>& allowed,
                         const std::string& context);

}  // namespace resforge
