#include "offload/cli/config.hpp"

#include <fstream>
#include <set>

#include "offload/core/errors.hpp"

namespace offload::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& path) {
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) {
            throw core::ConfigInvalid(path.empty() ? key : path + "." + key, "unknown field");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const json::exception& e) {
        throw core::ConfigInvalid(path.empty() ? key : path + "." + key, e.what());
    }
}

NodeEntry parse_node(const json& j, const std::string& path) {
    reject_unknown(j,
                   {"node_id", "category", "cores", "base_service_time_ms", "service_time_cv",
                    "power_idle_w", "power_busy_w", "queue_capacity", "initial_replicas",
                    "replica_addresses"},
                   path);
    if (!j.contains("node_id")) throw core::ConfigInvalid(path + ".node_id", "required");
    if (!j.contains("category")) throw core::ConfigInvalid(path + ".category", "required");

    std::string node_id = j.at("node_id").get<std::string>();
    core::NodeCategory category;
    try {
        category = core::category_from_string(j.at("category").get<std::string>());
    } catch (const core::Error& e) {
        throw core::ConfigInvalid(path + ".category", e.what());
    }

    NodeEntry entry;
    entry.spec = category == core::NodeCategory::Small
                     ? core::NodeSpec::small_default(std::move(node_id))
                     : core::NodeSpec::medium_default(std::move(node_id));
    read(j, "cores", entry.spec.cores, path);
    read(j, "base_service_time_ms", entry.spec.base_service_time_ms, path);
    read(j, "service_time_cv", entry.spec.service_time_cv, path);
    read(j, "power_idle_w", entry.spec.power_idle_w, path);
    read(j, "power_busy_w", entry.spec.power_busy_w, path);
    read(j, "queue_capacity", entry.spec.queue_capacity, path);
    read(j, "initial_replicas", entry.initial_replicas, path);
    read(j, "replica_addresses", entry.replica_addresses, path);
    try {
        entry.spec.validate();
    } catch (const core::Error& e) {
        throw core::ConfigInvalid(path, e.what());
    }
    if (entry.initial_replicas < 0) throw core::ConfigInvalid(path + ".initial_replicas", "negative");
    return entry;
}

}  // namespace

ScenarioConfig parse_config(const json& j) {
    if (!j.is_object()) throw core::ConfigInvalid("", "config must be a JSON object");
    reject_unknown(j,
                   {"backend", "seed", "strategy", "weights", "nodes", "phases", "loop_period_ms",
                    "metrics", "scaling", "profile_mapping", "normalize_metrics", "dispatcher",
                    "output_dir"},
                   "");

    ScenarioConfig config;
    read(j, "backend", config.backend, "");
    if (config.backend != "sim" && config.backend != "live") {
        throw core::ConfigInvalid("backend", "must be \"sim\" or \"live\"");
    }
    read(j, "seed", config.seed, "");
    if (j.contains("strategy")) {
        try {
            config.strategy = strategy::strategy_from_string(j.at("strategy").get<std::string>());
        } catch (const core::Error& e) {
            throw core::ConfigInvalid("strategy", e.what());
        }
    }
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        reject_unknown(w, {"w1", "w2", "w3"}, "weights");
        read(w, "w1", config.weights.w1, "weights");
        read(w, "w2", config.weights.w2, "weights");
        read(w, "w3", config.weights.w3, "weights");
    }
    try {
        config.weights.validate();
    } catch (const core::Error& e) {
        throw core::ConfigInvalid("weights", e.what());
    }

    if (!j.contains("nodes") || !j.at("nodes").is_array() || j.at("nodes").empty()) {
        throw core::ConfigInvalid("nodes", "at least one node required");
    }
    std::size_t i = 0;
    for (const auto& node : j.at("nodes")) {
        config.nodes.push_back(parse_node(node, "nodes[" + std::to_string(i) + "]"));
        ++i;
    }

    if (!j.contains("phases") || !j.at("phases").is_array() || j.at("phases").empty()) {
        throw core::ConfigInvalid("phases", "at least one phase required");
    }
    i = 0;
    for (const auto& phase : j.at("phases")) {
        const std::string path = "phases[" + std::to_string(i) + "]";
        reject_unknown(phase, {"rf", "duration_s", "tag_count", "tag_period_s"}, path);
        core::WorkloadPhase p;
        read(phase, "rf", p.rf, path);
        read(phase, "duration_s", p.duration_s, path);
        read(phase, "tag_count", p.tag_count, path);
        read(phase, "tag_period_s", p.tag_period_s, path);
        try {
            p.validate();
        } catch (const core::Error& e) {
            throw core::ConfigInvalid(path, e.what());
        }
        config.phases.push_back(p);
        ++i;
    }

    read(j, "loop_period_ms", config.loop_period_ms, "");
    if (config.loop_period_ms <= 0) throw core::ConfigInvalid("loop_period_ms", "must be positive");

    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        reject_unknown(m, {"sample_period_ms", "horizon_ms"}, "metrics");
        read(m, "sample_period_ms", config.sample_period_ms, "metrics");
        read(m, "horizon_ms", config.horizon_ms, "metrics");
        if (config.sample_period_ms <= 0) {
            throw core::ConfigInvalid("metrics.sample_period_ms", "must be positive");
        }
        if (config.horizon_ms <= 0) throw core::ConfigInvalid("metrics.horizon_ms", "must be positive");
    }
    if (j.contains("scaling")) {
        const auto& s = j.at("scaling");
        reject_unknown(s, {"min_replicas", "max_replicas", "high_cpu", "low_cpu"}, "scaling");
        read(s, "min_replicas", config.bounds.min_replicas, "scaling");
        read(s, "max_replicas", config.bounds.max_replicas, "scaling");
        read(s, "high_cpu", config.thresholds.high_cpu, "scaling");
        read(s, "low_cpu", config.thresholds.low_cpu, "scaling");
        if (config.bounds.min_replicas < 1 || config.bounds.max_replicas < config.bounds.min_replicas) {
            throw core::ConfigInvalid("scaling", "need 1 <= min_replicas <= max_replicas");
        }
    }
    if (j.contains("profile_mapping")) {
        const auto& m = j.at("profile_mapping");
        reject_unknown(m, {"kind", "epsilon", "temperature"}, "profile_mapping");
        if (m.contains("kind")) {
            const auto kind = m.at("kind").get<std::string>();
            if (kind == "inverse") {
                config.mapping.kind = strategy::ProfileMapping::Kind::Inverse;
            } else if (kind == "softmax") {
                config.mapping.kind = strategy::ProfileMapping::Kind::Softmax;
            } else {
                throw core::ConfigInvalid("profile_mapping.kind", "must be \"inverse\" or \"softmax\"");
            }
        }
        read(m, "epsilon", config.mapping.epsilon, "profile_mapping");
        read(m, "temperature", config.mapping.temperature, "profile_mapping");
        if (config.mapping.epsilon <= 0) {
            throw core::ConfigInvalid("profile_mapping.epsilon", "must be positive");
        }
        if (config.mapping.temperature <= 0) {
            throw core::ConfigInvalid("profile_mapping.temperature", "must be positive");
        }
    }
    read(j, "normalize_metrics", config.normalize_metrics, "");
    if (j.contains("dispatcher")) {
        const auto& d = j.at("dispatcher");
        reject_unknown(d, {"max_in_flight", "timeout_ms", "poll_period_ms"}, "dispatcher");
        read(d, "max_in_flight", config.dispatcher.max_in_flight, "dispatcher");
        read(d, "timeout_ms", config.dispatcher.timeout_ms, "dispatcher");
        read(d, "poll_period_ms", config.dispatcher.poll_period_ms, "dispatcher");
        try {
            config.dispatcher.validate();
        } catch (const core::Error& e) {
            throw core::ConfigInvalid("dispatcher", e.what());
        }
    }
    read(j, "output_dir", config.output_dir, "");

    if (config.backend == "live") {
        std::size_t addresses = 0;
        for (const auto& node : config.nodes) addresses += node.replica_addresses.size();
        if (addresses == 0) {
            throw core::ConfigInvalid("nodes", "live backend needs replica_addresses");
        }
    }
    return config;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw core::ConfigInvalid(path, "cannot open config file");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw core::ConfigInvalid(path, "not valid JSON");
    return parse_config(j);
}

sim::SimScenario to_sim_scenario(const ScenarioConfig& config) {
    sim::SimScenario s;
    for (const auto& node : config.nodes) {
        s.nodes.push_back({node.spec, node.initial_replicas});
    }
    s.phases = config.phases;
    s.strategy = config.strategy;
    s.weights = config.weights;
    s.seed = config.seed;
    s.loop_period_ms = config.loop_period_ms;
    s.sample_period_ms = config.sample_period_ms;
    s.horizon_ms = config.horizon_ms;
    s.thresholds = config.thresholds;
    s.bounds = config.bounds;
    s.mapping = config.mapping;
    s.normalize_metrics = config.normalize_metrics;
    return s;
}

live::LiveScenario to_live_scenario(const ScenarioConfig& config) {
    live::LiveScenario s;
    for (const auto& node : config.nodes) {
        s.node_specs[node.spec.node_id] = node.spec;
        int r = 0;
        for (const auto& address : node.replica_addresses) {
            core::PodRef pod;
            pod.node_id = node.spec.node_id;
            pod.category = node.spec.category;
            pod.pod_id = node.spec.node_id + "-p" + std::to_string(++r);
            pod.address = address;
            s.pods.push_back(std::move(pod));
        }
    }
    s.phases = config.phases;
    s.strategy = config.strategy;
    s.weights = config.weights;
    s.seed = config.seed;
    s.loop_period_ms = config.loop_period_ms;
    s.horizon_ms = config.horizon_ms;
    s.thresholds = config.thresholds;
    s.bounds = config.bounds;
    s.mapping = config.mapping;
    s.normalize_metrics = config.normalize_metrics;
    s.dispatcher = config.dispatcher;
    s.dispatcher.poll_period_ms = config.dispatcher.poll_period_ms;
    return s;
}

}  // namespace offload::cli
