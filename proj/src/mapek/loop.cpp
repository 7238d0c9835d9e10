#include "offload/mapek/loop.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "offload/core/errors.hpp"

namespace offload::mapek {

AnalysisFindings analyze(const Snapshot& snapshot, const Thresholds& thresholds) {
    AnalysisFindings f;
    double cpu_sum[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (const auto& pod : snapshot) {
        if (pod.cpu >= thresholds.high_cpu) f.overloaded_pods.insert(pod.pod_id);
        if (pod.cpu <= thresholds.low_cpu) f.underutilized_pods.insert(pod.pod_id);
        if (pod.queue_frac >= 0.9) f.drop_pressure = true;
        const int idx = pod.category == core::NodeCategory::Small ? 0 : 1;
        cpu_sum[idx] += pod.cpu;
        ++count[idx];
    }
    const double mean_small = count[0] ? cpu_sum[0] / static_cast<double>(count[0]) : 0.0;
    const double mean_medium = count[1] ? cpu_sum[1] / static_cast<double>(count[1]) : 0.0;
    f.category_imbalance = std::abs(mean_small - mean_medium);
    return f;
}

MapekLoop::MapekLoop(LoopConfig config, ClusterBackend& backend)
    : cfg_(config), backend_(&backend) {}

PlanResult MapekLoop::plan(const AnalysisFindings& findings, const Snapshot& snapshot) {
    if (snapshot.empty()) throw core::NoLivePods("plan over empty snapshot");

    PlanResult result;
    if (cfg_.strategy == strategy::StrategyKind::PodLevel) {
        strategy::MetricMap raw;
        for (const auto& pod : snapshot) {
            raw[pod.pod_id] = strategy::PodMetrics{pod.rt_ms, pod.cpu, pod.energy_mj};
        }
        const strategy::MetricMap normalized =
            cfg_.normalize_metrics ? strategy::normalize_metrics(raw) : raw;
        std::map<std::string, double> scores;
        for (const auto& [pod_id, m] : normalized) {
            scores[pod_id] = strategy::score_pod(m.rt_ms, m.cpu, m.energy_mj, cfg_.weights);
        }
        const std::uint64_t prev = profile_ ? profile_->version : 0;
        result.profile = std::make_shared<const core::ServiceProfile>(
            strategy::build_profile(scores, cfg_.mapping, prev, backend_->now_ms()));
    } else {
        result.profile = profile_;
    }

    // Scaling: +1 when any pod of a category is overloaded, -1 when every pod
    // of a category sits idle, always one step per pass and inside bounds.
    for (const auto cat : {core::NodeCategory::Small, core::NodeCategory::Medium}) {
        int pods_in_cat = 0;
        int overloaded = 0;
        int underutilized = 0;
        for (const auto& pod : snapshot) {
            if (pod.category != cat) continue;
            ++pods_in_cat;
            if (findings.overloaded_pods.contains(pod.pod_id)) ++overloaded;
            if (findings.underutilized_pods.contains(pod.pod_id)) ++underutilized;
        }
        if (pods_in_cat == 0) continue;
        const int replicas = backend_->replica_count(cat);
        if (overloaded > 0 && replicas < cfg_.bounds.max_replicas) {
            result.actions.push_back({cat, replicas + 1});
        } else if (underutilized == pods_in_cat && replicas > cfg_.bounds.min_replicas) {
            result.actions.push_back({cat, replicas - 1});
        }
    }
    return result;
}

void MapekLoop::execute(const PlanResult& result) {
    if (result.profile) {
        backend_->apply_profile(result.profile);
        profile_ = result.profile;
    }
    for (const auto& action : result.actions) {
        backend_->scale_to(action.category, action.target_replicas);
    }
}

IterationRecord MapekLoop::iterate() {
    IterationRecord record;
    record.ts = backend_->now_ms();
    try {
        const Snapshot snapshot = backend_->monitor();
        record.findings = analyze(snapshot, cfg_.thresholds);
        const PlanResult planned = plan(record.findings, snapshot);
        execute(planned);
        record.actions = planned.actions;
        if (profile_) {
            record.profile_version = profile_->version;
            record.probabilities = profile_->entries;
        }
    } catch (const core::BackendUnavailable&) {
        throw;
    } catch (const std::exception& e) {
        // Keep looping with the last good profile.
        record.failed = true;
        record.error = e.what();
        if (profile_) record.profile_version = profile_->version;
    }
    return record;
}

void run_loop(MapekLoop& loop, std::atomic<bool>& stop,
              const std::function<void(const IterationRecord&)>& on_iteration) {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::milliseconds(loop.config().period_ms);
    auto next = clock::now();
    while (!stop.load()) {
        try {
            const IterationRecord record = loop.iterate();
            if (on_iteration) on_iteration(record);
        } catch (const core::BackendUnavailable&) {
            return;  // halt gracefully
        }
        next += period;
        const auto now = clock::now();
        if (next < now) next = now;  // missed ticks are skipped, not queued
        while (!stop.load() && clock::now() < next) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    }
}

void to_json(nlohmann::json& j, const ScalingAction& a) {
    j = nlohmann::json{{"category", core::to_string(a.category)},
                       {"target_replicas", a.target_replicas}};
}

void to_json(nlohmann::json& j, const AnalysisFindings& f) {
    j = nlohmann::json{{"overloaded_pods", f.overloaded_pods},
                       {"underutilized_pods", f.underutilized_pods},
                       {"category_imbalance", f.category_imbalance},
                       {"drop_pressure", f.drop_pressure}};
}

void to_json(nlohmann::json& j, const IterationRecord& r) {
    j = nlohmann::json{{"ts", r.ts},
                       {"profile_version", r.profile_version},
                       {"probabilities", r.probabilities},
                       {"actions", r.actions},
                       {"findings", r.findings}};
    if (r.failed) j["error"] = r.error;
}

}  // namespace offload::mapek
