#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "offload/core/types.hpp"
#include "offload/metrics/store.hpp"
#include "offload/strategy/engine.hpp"

namespace offload::mapek {

struct Thresholds {
    double high_cpu = 0.8;
    double low_cpu = 0.2;
};

struct ScalingBounds {
    int min_replicas = 5;
    int max_replicas = 7;
};

/// One pod's view as seen by the analyzer: window aggregates plus the
/// backend-reported queue fill fraction.
struct PodSnapshot {
    std::string pod_id;
    core::NodeCategory category = core::NodeCategory::Small;
    double rt_ms = 0;
    double cpu = 0;
    double energy_mj = 0;
    double queue_frac = 0;
};

using Snapshot = std::vector<PodSnapshot>;

struct AnalysisFindings {
    std::set<std::string> overloaded_pods;
    std::set<std::string> underutilized_pods;
    double category_imbalance = 0;
    bool drop_pressure = false;
};

struct ScalingAction {
    core::NodeCategory category = core::NodeCategory::Small;
    int target_replicas = 0;
};

/// Classifies pods against the cpu thresholds and measures the imbalance
/// between the category means. A missing category contributes 0 to the mean.
AnalysisFindings analyze(const Snapshot& snapshot, const Thresholds& thresholds);

/// What the loop talks to: the simulator or the live cluster.
class ClusterBackend {
public:
    virtual ~ClusterBackend() = default;

    /// Consistent read of every live pod's aggregates (the Monitor phase).
    virtual Snapshot monitor() = 0;
    virtual int replica_count(core::NodeCategory c) const = 0;
    /// Atomically publishes the profile for the dispatcher.
    virtual void apply_profile(std::shared_ptr<const core::ServiceProfile> profile) = 0;
    virtual void scale_to(core::NodeCategory c, int target_replicas) = 0;
    virtual core::Ms now_ms() const = 0;
};

struct LoopConfig {
    core::Ms period_ms = 1000;
    Thresholds thresholds;
    ScalingBounds bounds;
    core::StrategyWeights weights;
    strategy::StrategyKind strategy = strategy::StrategyKind::PodLevel;
    strategy::ProfileMapping mapping;
    bool normalize_metrics = true;
};

struct PlanResult {
    std::shared_ptr<const core::ServiceProfile> profile;
    std::vector<ScalingAction> actions;
};

struct IterationRecord {
    core::Ms ts = 0;
    std::uint64_t profile_version = 0;
    std::map<std::string, double> probabilities;
    std::vector<ScalingAction> actions;
    AnalysisFindings findings;
    bool failed = false;
    std::string error;
};

void to_json(nlohmann::json& j, const ScalingAction& a);
void to_json(nlohmann::json& j, const AnalysisFindings& f);
void to_json(nlohmann::json& j, const IterationRecord& r);

/// The managing system: a monitor -> analyze -> plan -> execute pass per
/// period. One logical control thread; the dispatcher only ever sees whole
/// profiles through ClusterBackend::apply_profile.
class MapekLoop {
public:
    MapekLoop(LoopConfig config, ClusterBackend& backend);

    /// Runs one full pass. Failures inside analyze/plan/execute are recorded
    /// and do not poison later iterations; BackendUnavailable propagates.
    IterationRecord iterate();

    /// Plan phase: a fresh profile (pod-level strategy only; other strategies
    /// keep the previous profile) plus scaling targets per the +-1 rule.
    /// Throws NoLivePods when the snapshot is empty.
    PlanResult plan(const AnalysisFindings& findings, const Snapshot& snapshot);

    /// Execute phase: profile swap first, then replica adjustments.
    void execute(const PlanResult& result);

    const std::shared_ptr<const core::ServiceProfile>& current_profile() const { return profile_; }
    const LoopConfig& config() const { return cfg_; }

private:
    LoopConfig cfg_;
    ClusterBackend* backend_;
    std::shared_ptr<const core::ServiceProfile> profile_;
};

/// Wall-clock loop runner for the live harness. Ticks on an absolute
/// schedule until `stop` becomes true; halts on BackendUnavailable.
void run_loop(MapekLoop& loop, std::atomic<bool>& stop,
              const std::function<void(const IterationRecord&)>& on_iteration);

}  // namespace offload::mapek
