#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace offload::core {

/// Millisecond timestamps and durations. Simulated time starts at 0; the
/// live harness uses wall-clock epoch milliseconds.
using Ms = std::int64_t;

enum class NodeCategory { Small, Medium };

const char* to_string(NodeCategory c);
NodeCategory category_from_string(const std::string& s);

/// Static description of one compute node class. Pods placed on a node
/// inherit its service/power/queue parameters.
struct NodeSpec {
    std::string node_id;
    NodeCategory category = NodeCategory::Small;
    int cores = 2;                        // parallel worker slots per pod
    double base_service_time_ms = 150.0;  // mean per-task compute time, unloaded
    double service_time_cv = 1.2;         // coefficient of variation
    double power_idle_w = 2.5;
    double power_busy_w = 4.5;
    int queue_capacity = 9;

    /// Raspberry-Pi-class defaults: slow and frugal. One pod gets half the
    /// board's four cores.
    static NodeSpec small_default(std::string node_id);
    /// Ryzen-mini-PC-class defaults: 12 hardware threads split between two
    /// pods.
    static NodeSpec medium_default(std::string node_id);

    void validate() const;
};

/// One deployed replica: the unit of dispatch and scaling.
struct PodRef {
    std::string pod_id;
    std::string node_id;
    NodeCategory category = NodeCategory::Small;
    std::string address;  // host:port in the live harness, empty in simulation

    bool operator==(const PodRef&) const = default;
};

/// Scoring weights: w1 response time, w2 CPU, w3 energy (pod-level only).
struct StrategyWeights {
    double w1 = 0.5;
    double w2 = 0.3;
    double w3 = 0.2;

    void validate() const;  // w1 + w2 + w3 > 0, all non-negative
};

struct Task {
    std::string task_id;
    std::string tag_id;
    Ms arrival_time_ms = 0;
    int replication_index = 0;
};

/// Measured fate of one offloaded task.
struct TaskOutcome {
    std::string task_id;
    std::string pod_id;          // empty if dropped
    Ms dispatch_time_ms = 0;
    Ms completion_time_ms = 0;   // 0 if dropped
    double response_time_ms = 0; // completion - dispatch; 0 if dropped
    double energy_mj = 0;        // energy attributed to this task; 0 if dropped
    bool dropped = false;

    void validate() const;
};

/// Dispatch probabilities per pod, replaced atomically as a whole.
struct ServiceProfile {
    std::map<std::string, double> entries;  // pod_id -> probability
    std::uint64_t version = 0;
    Ms updated_at_ms = 0;

    void validate() const;  // entries non-empty, >= 0, sum to 1 +- 1e-9
};

struct WorkloadPhase {
    int rf = 1;               // replication factor
    double duration_s = 180.0;
    int tag_count = 19;
    double tag_period_s = 1.0;

    double offered_rate() const { return tag_count * rf / tag_period_s; }
    void validate() const;
};

struct PhaseStats {
    int rf = 0;
    Ms start_ms = 0;
    Ms end_ms = 0;
    std::int64_t tasks = 0;
    std::int64_t completed = 0;
    std::int64_t drops = 0;
    double avg_rt_ms = 0;
    double p99_rt_ms = 0;
    double energy_per_task_mj = 0;
};

struct TimelineRow {
    Ms timestamp_ms = 0;
    std::int64_t completed = 0;
    std::int64_t dropped = 0;
    double cpu_small = 0;
    double cpu_medium = 0;
};

/// Per-strategy aggregates over one experiment run.
struct ExperimentReport {
    std::string strategy_name;
    std::uint64_t seed = 0;
    double avg_rt_ms = 0;
    double p99_rt_ms = 0;
    double energy_per_task_mj = 0;
    std::int64_t drop_count = 0;
    std::int64_t total_tasks = 0;
    std::int64_t completed_tasks = 0;
    std::int64_t in_flight_tasks = 0;
    bool aborted = false;
    std::map<NodeCategory, double> per_category_utilization;
    std::vector<PhaseStats> phases;
    std::vector<TimelineRow> timeline;
};

// JSON encodings. Field names are snake_case and match the struct members.
void to_json(nlohmann::json& j, const NodeSpec& v);
void from_json(const nlohmann::json& j, NodeSpec& v);
void to_json(nlohmann::json& j, const PodRef& v);
void from_json(const nlohmann::json& j, PodRef& v);
void to_json(nlohmann::json& j, const StrategyWeights& v);
void from_json(const nlohmann::json& j, StrategyWeights& v);
void to_json(nlohmann::json& j, const Task& v);
void from_json(const nlohmann::json& j, Task& v);
void to_json(nlohmann::json& j, const TaskOutcome& v);
void from_json(const nlohmann::json& j, TaskOutcome& v);
void to_json(nlohmann::json& j, const ServiceProfile& v);
void from_json(const nlohmann::json& j, ServiceProfile& v);
void to_json(nlohmann::json& j, const WorkloadPhase& v);
void from_json(const nlohmann::json& j, WorkloadPhase& v);
void to_json(nlohmann::json& j, const PhaseStats& v);
void from_json(const nlohmann::json& j, PhaseStats& v);
void to_json(nlohmann::json& j, const TimelineRow& v);
void from_json(const nlohmann::json& j, TimelineRow& v);
void to_json(nlohmann::json& j, const ExperimentReport& v);
void from_json(const nlohmann::json& j, ExperimentReport& v);

}  // namespace offload::core
