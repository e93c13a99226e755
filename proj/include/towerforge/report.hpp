#pragma once

#include <json.hpp>
#include <string>

#include "towerforge/pipeline.hpp"

namespace towerforge::report {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

// Every document the CLI emits is wrapped in {schema_version, kind, report}.
json envelope(const std::string& kind, json body);
std::string render(const json& j);  // two-space indent plus trailing newline

json to_json(const pipeline::SigmaReport& r);
json to_json(const pipeline::SeqCheckReport& r);
json to_json(const pipeline::CompositumReport& r);
json to_json(const pipeline::StepCertificate& c);
json to_json(const pipeline::PipelineReport& r);
json to_json(const pipeline::TameSelection& t);
json to_json(const pipeline::EliminationOutcome& o);

pipeline::SigmaReport sigma_from_json(const json& j);
pipeline::SeqCheckReport seq_from_json(const json& j);
pipeline::CompositumReport compositum_from_json(const json& j);
pipeline::StepCertificate step_from_json(const json& j);
pipeline::PipelineReport pipeline_from_json(const json& j);
pipeline::TameSelection tame_from_json(const json& j);

}  // namespace towerforge::report
