#include "offload/core/types.hpp"

#include <cmath>

#include "offload/core/errors.hpp"

namespace offload::core {

const char* to_string(NodeCategory c) {
    return c == NodeCategory::Small ? "small" : "medium";
}

NodeCategory category_from_string(const std::string& s) {
    if (s == "small") return NodeCategory::Small;
    if (s == "medium") return NodeCategory::Medium;
    throw Error("unknown node category: " + s);
}

NodeSpec NodeSpec::small_default(std::string node_id) {
    NodeSpec n;
    n.node_id = std::move(node_id);
    n.category = NodeCategory::Small;
    n.cores = 2;
    n.base_service_time_ms = 150.0;
    // Throttling-prone boards: long service stalls are common under load.
    n.service_time_cv = 1.2;
    n.power_idle_w = 2.5;
    n.power_busy_w = 4.5;
    n.queue_capacity = 9;
    return n;
}

NodeSpec NodeSpec::medium_default(std::string node_id) {
    NodeSpec n;
    n.node_id = std::move(node_id);
    n.category = NodeCategory::Medium;
    n.cores = 6;
    n.base_service_time_ms = 55.0;
    n.service_time_cv = 0.2;
    n.power_idle_w = 8.0;
    n.power_busy_w = 20.0;
    n.queue_capacity = 9;
    return n;
}

void NodeSpec::validate() const {
    if (node_id.empty()) throw Error("node_id empty");
    if (cores <= 0) throw Error("cores must be positive");
    if (base_service_time_ms <= 0) throw Error("base_service_time_ms must be positive");
    if (service_time_cv < 0) throw Error("service_time_cv must be non-negative");
    if (power_idle_w <= 0 || power_busy_w <= 0) throw Error("power must be positive");
    if (power_busy_w < power_idle_w) throw Error("power_busy_w must be >= power_idle_w");
    if (queue_capacity <= 0) throw Error("queue_capacity must be positive");
}

void StrategyWeights::validate() const {
    if (w1 < 0 || w2 < 0 || w3 < 0) throw Error("weights must be non-negative");
    if (w1 + w2 + w3 <= 0) throw Error("weights must not all be zero");
}

void TaskOutcome::validate() const {
    if (dropped) {
        if (completion_time_ms != 0 || response_time_ms != 0 || energy_mj != 0) {
            throw Error("dropped outcome must have zero completion/rt/energy");
        }
    } else {
        if (pod_id.empty()) throw Error("completed outcome needs pod_id");
        if (response_time_ms < 0) throw Error("response_time_ms must be >= 0");
    }
}

void ServiceProfile::validate() const {
    if (entries.empty()) throw Error("service profile has no entries");
    double sum = 0;
    for (const auto& [pod, p] : entries) {
        if (p < 0) throw Error("negative probability for pod " + pod);
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error("service profile probabilities sum to " + std::to_string(sum));
    }
}

void WorkloadPhase::validate() const {
    if (rf <= 0) throw Error("rf must be positive");
    if (duration_s <= 0) throw Error("duration_s must be positive");
    if (tag_count <= 0) throw Error("tag_count must be positive");
    if (tag_period_s <= 0) throw Error("tag_period_s must be positive");
}

void to_json(nlohmann::json& j, const NodeSpec& v) {
    j = nlohmann::json{{"node_id", v.node_id},
                       {"category", to_string(v.category)},
                       {"cores", v.cores},
                       {"base_service_time_ms", v.base_service_time_ms},
                       {"service_time_cv", v.service_time_cv},
                       {"power_idle_w", v.power_idle_w},
                       {"power_busy_w", v.power_busy_w},
                       {"queue_capacity", v.queue_capacity}};
}

void from_json(const nlohmann::json& j, NodeSpec& v) {
    j.at("node_id").get_to(v.node_id);
    v.category = category_from_string(j.at("category").get<std::string>());
    j.at("cores").get_to(v.cores);
    j.at("base_service_time_ms").get_to(v.base_service_time_ms);
    j.at("service_time_cv").get_to(v.service_time_cv);
    j.at("power_idle_w").get_to(v.power_idle_w);
    j.at("power_busy_w").get_to(v.power_busy_w);
    j.at("queue_capacity").get_to(v.queue_capacity);
}

void to_json(nlohmann::json& j, const PodRef& v) {
    j = nlohmann::json{{"pod_id", v.pod_id},
                       {"node_id", v.node_id},
                       {"category", to_string(v.category)},
                       {"address", v.address}};
}

void from_json(const nlohmann::json& j, PodRef& v) {
    j.at("pod_id").get_to(v.pod_id);
    j.at("node_id").get_to(v.node_id);
    v.category = category_from_string(j.at("category").get<std::string>());
    j.at("address").get_to(v.address);
}

void to_json(nlohmann::json& j, const StrategyWeights& v) {
    j = nlohmann::json{{"w1", v.w1}, {"w2", v.w2}, {"w3", v.w3}};
}

void from_json(const nlohmann::json& j, StrategyWeights& v) {
    j.at("w1").get_to(v.w1);
    j.at("w2").get_to(v.w2);
    j.at("w3").get_to(v.w3);
}

void to_json(nlohmann::json& j, const Task& v) {
    j = nlohmann::json{{"task_id", v.task_id},
                       {"tag_id", v.tag_id},
                       {"arrival_time_ms", v.arrival_time_ms},
                       {"replication_index", v.replication_index}};
}

void from_json(const nlohmann::json& j, Task& v) {
    j.at("task_id").get_to(v.task_id);
    j.at("tag_id").get_to(v.tag_id);
    j.at("arrival_time_ms").get_to(v.arrival_time_ms);
    j.at("replication_index").get_to(v.replication_index);
}

void to_json(nlohmann::json& j, const TaskOutcome& v) {
    j = nlohmann::json{{"task_id", v.task_id},
                       {"dispatch_time_ms", v.dispatch_time_ms},
                       {"dropped", v.dropped}};
    if (!v.dropped) {
        j["pod_id"] = v.pod_id;
        j["completion_time_ms"] = v.completion_time_ms;
        j["response_time_ms"] = v.response_time_ms;
        j["energy_mj"] = v.energy_mj;
    }
}

void from_json(const nlohmann::json& j, TaskOutcome& v) {
    v = TaskOutcome{};
    j.at("task_id").get_to(v.task_id);
    j.at("dispatch_time_ms").get_to(v.dispatch_time_ms);
    j.at("dropped").get_to(v.dropped);
    if (!v.dropped) {
        j.at("pod_id").get_to(v.pod_id);
        j.at("completion_time_ms").get_to(v.completion_time_ms);
        j.at("response_time_ms").get_to(v.response_time_ms);
        j.at("energy_mj").get_to(v.energy_mj);
    }
}

void to_json(nlohmann::json& j, const ServiceProfile& v) {
    j = nlohmann::json{{"entries", v.entries},
                       {"version", v.version},
                       {"updated_at_ms", v.updated_at_ms}};
}

void from_json(const nlohmann::json& j, ServiceProfile& v) {
    j.at("entries").get_to(v.entries);
    j.at("version").get_to(v.version);
    j.at("updated_at_ms").get_to(v.updated_at_ms);
}

void to_json(nlohmann::json& j, const WorkloadPhase& v) {
    j = nlohmann::json{{"rf", v.rf},
                       {"duration_s", v.duration_s},
                       {"tag_count", v.tag_count},
                       {"tag_period_s", v.tag_period_s}};
}

void from_json(const nlohmann::json& j, WorkloadPhase& v) {
    v = WorkloadPhase{};
    j.at("rf").get_to(v.rf);
    j.at("duration_s").get_to(v.duration_s);
    if (j.contains("tag_count")) j.at("tag_count").get_to(v.tag_count);
    if (j.contains("tag_period_s")) j.at("tag_period_s").get_to(v.tag_period_s);
}

void to_json(nlohmann::json& j, const PhaseStats& v) {
    j = nlohmann::json{{"rf", v.rf},
                       {"start_ms", v.start_ms},
                       {"end_ms", v.end_ms},
                       {"tasks", v.tasks},
                       {"completed", v.completed},
                       {"drops", v.drops},
                       {"avg_rt_ms", v.avg_rt_ms},
                       {"p99_rt_ms", v.p99_rt_ms},
                       {"energy_per_task_mj", v.energy_per_task_mj}};
}

void from_json(const nlohmann::json& j, PhaseStats& v) {
    j.at("rf").get_to(v.rf);
    j.at("start_ms").get_to(v.start_ms);
    j.at("end_ms").get_to(v.end_ms);
    j.at("tasks").get_to(v.tasks);
    j.at("completed").get_to(v.completed);
    j.at("drops").get_to(v.drops);
    j.at("avg_rt_ms").get_to(v.avg_rt_ms);
    j.at("p99_rt_ms").get_to(v.p99_rt_ms);
    j.at("energy_per_task_mj").get_to(v.energy_per_task_mj);
}

void to_json(nlohmann::json& j, const TimelineRow& v) {
    j = nlohmann::json{{"timestamp_ms", v.timestamp_ms},
                       {"completed", v.completed},
                       {"dropped", v.dropped},
                       {"cpu_small", v.cpu_small},
                       {"cpu_medium", v.cpu_medium}};
}

void from_json(const nlohmann::json& j, TimelineRow& v) {
    j.at("timestamp_ms").get_to(v.timestamp_ms);
    j.at("completed").get_to(v.completed);
    j.at("dropped").get_to(v.dropped);
    j.at("cpu_small").get_to(v.cpu_small);
    j.at("cpu_medium").get_to(v.cpu_medium);
}

void to_json(nlohmann::json& j, const ExperimentReport& v) {
    nlohmann::json util = nlohmann::json::object();
    for (const auto& [cat, u] : v.per_category_utilization) {
        util[to_string(cat)] = u;
    }
    j = nlohmann::json{{"strategy_name", v.strategy_name},
                       {"seed", v.seed},
                       {"avg_rt_ms", v.avg_rt_ms},
                       {"p99_rt_ms", v.p99_rt_ms},
                       {"energy_per_task_mj", v.energy_per_task_mj},
                       {"drop_count", v.drop_count},
                       {"total_tasks", v.total_tasks},
                       {"completed_tasks", v.completed_tasks},
                       {"in_flight_tasks", v.in_flight_tasks},
                       {"aborted", v.aborted},
                       {"per_category_utilization", util},
                       {"phases", v.phases},
                       {"timeline", v.timeline}};
}

void from_json(const nlohmann::json& j, ExperimentReport& v) {
    j.at("strategy_name").get_to(v.strategy_name);
    j.at("seed").get_to(v.seed);
    j.at("avg_rt_ms").get_to(v.avg_rt_ms);
    j.at("p99_rt_ms").get_to(v.p99_rt_ms);
    j.at("energy_per_task_mj").get_to(v.energy_per_task_mj);
    j.at("drop_count").get_to(v.drop_count);
    j.at("total_tasks").get_to(v.total_tasks);
    j.at("completed_tasks").get_to(v.completed_tasks);
    j.at("in_flight_tasks").get_to(v.in_flight_tasks);
    j.at("aborted").get_to(v.aborted);
    v.per_category_utilization.clear();
    for (const auto& [key, u] : j.at("per_category_utilization").items()) {
        v.per_category_utilization[category_from_string(key)] = u.get<double>();
    }
    j.at("phases").get_to(v.phases);
    j.at("timeline").get_to(v.timeline);
}

}  // namespace offload::core
