#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "offload/core/rng.hpp"
#include "offload/core/types.hpp"

namespace offload::strategy {

enum class StrategyKind { StaticSplit, CategoryArgmin, PodLevel };

const char* to_string(StrategyKind k);
StrategyKind strategy_from_string(const std::string& s);

struct PodMetrics {
    double rt_ms = 0;
    double cpu = 0;
    double energy_mj = 0;
};

using MetricMap = std::map<std::string, PodMetrics>;

/// Divides each metric by its maximum over all pods so the weighted sum is
/// unit-free. A metric whose maximum is 0 normalizes to all zeros.
/// Throws EmptyInput.
MetricMap normalize_metrics(const MetricMap& raw);

/// Category score: w1 * rt + w2 * cpu (w3 unused at this granularity).
double score_category(double rt_n, double cpu_n, const core::StrategyWeights& w);

/// Pod score: w1 * rt + w2 * cpu + w3 * energy.
double score_pod(double rt_n, double cpu_n, double e_n, const core::StrategyWeights& w);

struct CategoryMetrics {
    double rt_ms = 0;
    double cpu = 0;
};

/// Argmin of the category scores after cross-category normalization.
/// Ties break toward Medium (the faster hardware). Throws EmptyCategory
/// unless both categories are present.
core::NodeCategory assign_category(const std::map<core::NodeCategory, CategoryMetrics>& by_category,
                                   const core::StrategyWeights& w);

/// Inverse-score probabilities: p(i) = (1/(s_i + eps)) / sum_j (1/(s_j + eps)),
/// so lower score means higher probability. The epsilon is applied relative
/// to the maximum score, which keeps the mapping scale-invariant; an all-zero
/// score map yields the uniform profile. Throws EmptyInput.
core::ServiceProfile scores_to_profile(const std::map<std::string, double>& scores,
                                       double epsilon = 1e-6, std::uint64_t prev_version = 0,
                                       core::Ms now_ms = 0);

struct ProfileMapping {
    enum class Kind { Inverse, Softmax };
    Kind kind = Kind::Inverse;
    double epsilon = 1e-6;      // inverse mapping
    double temperature = 0.25;  // softmax(-score / temperature)
};

/// scores_to_profile with the mapping selected by config.
core::ServiceProfile build_profile(const std::map<std::string, double>& scores,
                                   const ProfileMapping& mapping, std::uint64_t prev_version,
                                   core::Ms now_ms);

/// Samples a pod id by inverse CDF over the profile's entries ordered by
/// pod_id, so draws are reproducible for a given generator state.
/// Throws EmptyProfile.
std::string sample_pod(const core::ServiceProfile& profile, core::Rng& rng);

/// Per-service round-robin cursors. A cursor resets to the front whenever
/// the service's pod membership changes (proxy table rebuild semantics).
class RoundRobinState {
public:
    /// Next pod of the service, cycling in list order. Throws EmptyService.
    const core::PodRef& next(const std::string& service_id,
                             const std::vector<core::PodRef>& service_pods);

private:
    struct Cursor {
        std::size_t index = 0;
        std::vector<std::string> membership;
    };
    std::map<std::string, Cursor> cursors_;
};

/// Immutable inputs to one dispatch decision.
struct ClusterView {
    std::vector<core::PodRef> pods;  // live pods, sorted by pod_id
    std::map<core::NodeCategory, CategoryMetrics> category_metrics;
    std::shared_ptr<const core::ServiceProfile> profile;  // pod-level strategy

    std::vector<core::PodRef> pods_in(core::NodeCategory c) const;
};

/// Owns the per-strategy mutable state (round-robin cursors, the static-split
/// alternator, and the sampling rng). Calls must be externally serialized.
class Dispatcher {
public:
    Dispatcher(StrategyKind kind, core::StrategyWeights weights, std::uint64_t seed);

    /// Picks the target pod for one task. Throws NoLivePods when the view is
    /// empty and EmptyProfile when the pod-level profile is unusable.
    core::PodRef decide(const core::Task& task, const ClusterView& view);

    StrategyKind kind() const { return kind_; }

private:
    StrategyKind kind_;
    core::StrategyWeights weights_;
    RoundRobinState round_robin_;
    std::uint64_t split_counter_ = 0;
    core::Rng rng_;
};

}  // namespace offload::strategy
