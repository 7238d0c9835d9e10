#pragma once

#include <map>
#include <string>
#include <vector>

#include "offload/core/report.hpp"
#include "offload/core/types.hpp"
#include "offload/mapek/loop.hpp"
#include "offload/strategy/engine.hpp"

namespace offload::live {

struct DispatcherConfig {
    int max_in_flight = 20;       // concurrent offloading workers
    core::Ms timeout_ms = 5000;   // per-request; a timeout drops the task
    core::Ms poll_period_ms = 200;

    void validate() const;
};

/// A live run against already-running worker processes. Pod addresses come
/// from the scenario; the harness never starts or stops workers, so scaling
/// actions are recorded but not applied.
struct LiveScenario {
    std::vector<core::PodRef> pods;
    std::map<std::string, core::NodeSpec> node_specs;  // node_id -> emulated spec
    std::vector<core::WorkloadPhase> phases;
    strategy::StrategyKind strategy = strategy::StrategyKind::PodLevel;
    core::StrategyWeights weights;
    std::uint64_t seed = 1;
    core::Ms loop_period_ms = 1000;
    core::Ms horizon_ms = 5000;
    mapek::Thresholds thresholds;
    mapek::ScalingBounds bounds;
    strategy::ProfileMapping mapping;
    bool normalize_metrics = true;
    DispatcherConfig dispatcher;
};

struct LiveRunResult {
    core::ExperimentReport report;
    std::vector<core::TaskOutcome> outcomes;
    std::vector<metrics::MetricsSample> samples;
    std::vector<mapek::IterationRecord> loop_records;
    std::map<std::string, core::NodeCategory> pod_categories;
    int dispatcher_inflight_hwm = 0;
    /// Worker-reported service time per task id, for RT >= service checks.
    std::map<std::string, double> worker_service_ms;
};

/// Drives the workload in wall-clock time with a bounded dispatch pool, the
/// 5 Hz metrics poller, and the MAPE-K loop running concurrently. Timestamps
/// in the result are milliseconds since run start, matching the simulator's
/// report schema. Aborts with a partial report when more than half of the
/// pods become unreachable.
LiveRunResult run_live_experiment(const LiveScenario& scenario);

}  // namespace offload::live
