#pragma once

// JSON documents for configs, run reports and EVT fits. Field names are
// stable; keys are emitted in sorted order.

#include "oodgmix/evt.hpp"
#include "oodgmix/split.hpp"
#include "oodgmix/trainer.hpp"

#include <json.hpp>

#include <string>

namespace oodgmix {

nlohmann::json to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const evt::EvtModel& model);
evt::EvtModel evt_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SplitStats& stats);

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

std::string serialize_report(const RunReport& report);
RunReport parse_report(const std::string& text);

/// Serialized report with wall_clock_seconds zeroed, for determinism checks.
std::string serialize_report_without_timing(RunReport report);

}  // namespace oodgmix
