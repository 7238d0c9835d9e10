#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "offload/live/harness.hpp"
#include "offload/sim/simulator.hpp"

namespace offload::cli {

struct NodeEntry {
    core::NodeSpec spec;
    int initial_replicas = 1;
    std::vector<std::string> replica_addresses;  // live backend only
};

/// One experiment, fully described by a single JSON document. Unknown fields
/// are rejected; omitted node fields fall back to the category defaults.
struct ScenarioConfig {
    std::string backend = "sim";  // "sim" | "live"
    std::uint64_t seed = 1;
    strategy::StrategyKind strategy = strategy::StrategyKind::PodLevel;
    core::StrategyWeights weights;
    std::vector<NodeEntry> nodes;
    std::vector<core::WorkloadPhase> phases;
    core::Ms loop_period_ms = 1000;
    core::Ms sample_period_ms = 200;
    core::Ms horizon_ms = 5000;
    mapek::Thresholds thresholds;
    mapek::ScalingBounds bounds;
    strategy::ProfileMapping mapping;
    bool normalize_metrics = true;
    live::DispatcherConfig dispatcher;
    std::string output_dir = "out";
};

/// Strict parse + validation. Throws ConfigInvalid naming the field path.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config_file(const std::string& path);

sim::SimScenario to_sim_scenario(const ScenarioConfig& config);
live::LiveScenario to_live_scenario(const ScenarioConfig& config);

}  // namespace offload::cli
