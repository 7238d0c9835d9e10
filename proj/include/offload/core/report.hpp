#pragma once

#include <map>
#include <string>
#include <vector>

#include "offload/core/types.hpp"
#include "offload/metrics/store.hpp"

namespace offload::core {

struct ReportInputs {
    std::string strategy_name;
    std::uint64_t seed = 0;
    std::int64_t total_generated = 0;
    std::int64_t in_flight = 0;
    bool aborted = false;
    Ms phase0_start_ms = 0;
    std::vector<WorkloadPhase> phases;
    const std::vector<TaskOutcome>* outcomes = nullptr;
    const std::vector<metrics::MetricsSample>* samples = nullptr;
    const std::map<std::string, NodeCategory>* pod_categories = nullptr;
    std::vector<TimelineRow> timeline;
};

/// Aggregates outcomes and samples into the report. Enforces task
/// conservation: total == completed + dropped + in_flight, exactly.
ExperimentReport build_report(const ReportInputs& in);

extern const char* const kOutcomesCsvHeader;  // task_id,pod_id,dispatch_ms,rt_ms,energy_mj,dropped
void append_outcome_csv(std::ostream& out, const TaskOutcome& o);

}  // namespace offload::core
