#include "offload/strategy/engine.hpp"

#include <algorithm>
#include <cmath>

#include "offload/core/errors.hpp"

namespace offload::strategy {

const char* to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::StaticSplit: return "static_split";
        case StrategyKind::CategoryArgmin: return "category_argmin";
        case StrategyKind::PodLevel: return "pod_level";
    }
    return "unknown";
}

StrategyKind strategy_from_string(const std::string& s) {
    if (s == "static_split") return StrategyKind::StaticSplit;
    if (s == "category_argmin") return StrategyKind::CategoryArgmin;
    if (s == "pod_level") return StrategyKind::PodLevel;
    throw core::Error("unknown strategy: " + s);
}

MetricMap normalize_metrics(const MetricMap& raw) {
    if (raw.empty()) throw core::EmptyInput("normalize_metrics: no pods");
    double max_rt = 0, max_cpu = 0, max_e = 0;
    for (const auto& [pod, m] : raw) {
        max_rt = std::max(max_rt, m.rt_ms);
        max_cpu = std::max(max_cpu, m.cpu);
        max_e = std::max(max_e, m.energy_mj);
    }
    MetricMap out;
    for (const auto& [pod, m] : raw) {
        out[pod] = PodMetrics{max_rt > 0 ? m.rt_ms / max_rt : 0.0,
                              max_cpu > 0 ? m.cpu / max_cpu : 0.0,
                              max_e > 0 ? m.energy_mj / max_e : 0.0};
    }
    return out;
}

double score_category(double rt_n, double cpu_n, const core::StrategyWeights& w) {
    return w.w1 * rt_n + w.w2 * cpu_n;
}

double score_pod(double rt_n, double cpu_n, double e_n, const core::StrategyWeights& w) {
    return w.w1 * rt_n + w.w2 * cpu_n + w.w3 * e_n;
}

core::NodeCategory assign_category(const std::map<core::NodeCategory, CategoryMetrics>& by_category,
                                   const core::StrategyWeights& w) {
    if (!by_category.contains(core::NodeCategory::Small) ||
        !by_category.contains(core::NodeCategory::Medium)) {
        throw core::EmptyCategory("assign_category needs both categories live");
    }
    double max_rt = 0, max_cpu = 0;
    for (const auto& [cat, m] : by_category) {
        max_rt = std::max(max_rt, m.rt_ms);
        max_cpu = std::max(max_cpu, m.cpu);
    }
    const auto score = [&](const CategoryMetrics& m) {
        return score_category(max_rt > 0 ? m.rt_ms / max_rt : 0.0,
                              max_cpu > 0 ? m.cpu / max_cpu : 0.0, w);
    };
    const double s_small = score(by_category.at(core::NodeCategory::Small));
    const double s_medium = score(by_category.at(core::NodeCategory::Medium));
    // Tie breaks toward Medium.
    return s_small < s_medium ? core::NodeCategory::Small : core::NodeCategory::Medium;
}

core::ServiceProfile scores_to_profile(const std::map<std::string, double>& scores, double epsilon,
                                       std::uint64_t prev_version, core::Ms now_ms) {
    if (scores.empty()) throw core::EmptyInput("scores_to_profile: no pods");
    core::ServiceProfile profile;
    profile.version = prev_version + 1;
    profile.updated_at_ms = now_ms;

    double max_score = 0;
    for (const auto& [pod, s] : scores) {
        if (s < 0) throw core::Error("negative score for pod " + pod);
        max_score = std::max(max_score, s);
    }
    if (max_score == 0) {
        const double uniform = 1.0 / static_cast<double>(scores.size());
        for (const auto& [pod, _] : scores) profile.entries[pod] = uniform;
        return profile;
    }
    const double eps = epsilon * max_score;
    double total = 0;
    for (const auto& [pod, s] : scores) total += 1.0 / (s + eps);
    for (const auto& [pod, s] : scores) {
        profile.entries[pod] = (1.0 / (s + eps)) / total;
    }
    return profile;
}

core::ServiceProfile build_profile(const std::map<std::string, double>& scores,
                                   const ProfileMapping& mapping, std::uint64_t prev_version,
                                   core::Ms now_ms) {
    if (mapping.kind == ProfileMapping::Kind::Inverse) {
        return scores_to_profile(scores, mapping.epsilon, prev_version, now_ms);
    }
    if (scores.empty()) throw core::EmptyInput("build_profile: no pods");
    core::ServiceProfile profile;
    profile.version = prev_version + 1;
    profile.updated_at_ms = now_ms;
    double min_score = scores.begin()->second;
    for (const auto& [pod, s] : scores) min_score = std::min(min_score, s);
    double total = 0;
    for (const auto& [pod, s] : scores) {
        total += std::exp(-(s - min_score) / mapping.temperature);
    }
    for (const auto& [pod, s] : scores) {
        profile.entries[pod] = std::exp(-(s - min_score) / mapping.temperature) / total;
    }
    return profile;
}

std::string sample_pod(const core::ServiceProfile& profile, core::Rng& rng) {
    if (profile.entries.empty()) throw core::EmptyProfile("sample_pod: empty profile");
    const double u = rng.next_double();
    double cum = 0;
    // std::map iterates keys in order, which is the committed draw order.
    for (const auto& [pod, p] : profile.entries) {
        cum += p;
        if (u < cum) return pod;
    }
    return profile.entries.rbegin()->first;
}

const core::PodRef& RoundRobinState::next(const std::string& service_id,
                                          const std::vector<core::PodRef>& service_pods) {
    if (service_pods.empty()) throw core::EmptyService("round robin over empty service " + service_id);
    std::vector<std::string> membership;
    membership.reserve(service_pods.size());
    for (const auto& p : service_pods) membership.push_back(p.pod_id);

    Cursor& cur = cursors_[service_id];
    if (cur.membership != membership) {
        cur.membership = std::move(membership);
        cur.index = 0;
    }
    const core::PodRef& chosen = service_pods[cur.index % service_pods.size()];
    cur.index = (cur.index + 1) % service_pods.size();
    return chosen;
}

std::vector<core::PodRef> ClusterView::pods_in(core::NodeCategory c) const {
    std::vector<core::PodRef> out;
    for (const auto& p : pods) {
        if (p.category == c) out.push_back(p);
    }
    return out;
}

Dispatcher::Dispatcher(StrategyKind kind, core::StrategyWeights weights, std::uint64_t seed)
    : kind_(kind), weights_(weights), rng_(core::derive_seed(seed, "dispatcher")) {}

core::PodRef Dispatcher::decide(const core::Task& task, const ClusterView& view) {
    (void)task;
    if (view.pods.empty()) throw core::NoLivePods("no live pods to dispatch to");

    switch (kind_) {
        case StrategyKind::StaticSplit: {
            // Alternate categories in equal proportion, small first, then
            // round-robin inside the chosen category's service.
            const auto preferred = (split_counter_++ % 2 == 0) ? core::NodeCategory::Small
                                                               : core::NodeCategory::Medium;
            auto pods = view.pods_in(preferred);
            if (pods.empty()) {
                pods = view.pods_in(preferred == core::NodeCategory::Small
                                        ? core::NodeCategory::Medium
                                        : core::NodeCategory::Small);
            }
            return round_robin_.next(core::to_string(pods.front().category), pods);
        }
        case StrategyKind::CategoryArgmin: {
            const auto small_pods = view.pods_in(core::NodeCategory::Small);
            const auto medium_pods = view.pods_in(core::NodeCategory::Medium);
            core::NodeCategory winner;
            if (small_pods.empty()) {
                winner = core::NodeCategory::Medium;
            } else if (medium_pods.empty()) {
                winner = core::NodeCategory::Small;
            } else {
                winner = assign_category(view.category_metrics, weights_);
            }
            const auto& pods = winner == core::NodeCategory::Small ? small_pods : medium_pods;
            return round_robin_.next(core::to_string(winner), pods);
        }
        case StrategyKind::PodLevel: {
            if (!view.profile) throw core::EmptyProfile("pod-level dispatch without a profile");
            // Restrict the profile to live pods; renormalize if membership
            // changed since the profile was planned.
            core::ServiceProfile effective;
            effective.version = view.profile->version;
            double total = 0;
            for (const auto& p : view.pods) {
                const auto it = view.profile->entries.find(p.pod_id);
                if (it != view.profile->entries.end()) {
                    effective.entries[p.pod_id] = it->second;
                    total += it->second;
                }
            }
            if (effective.entries.empty() || total <= 0) {
                throw core::EmptyProfile("profile covers no live pod");
            }
            for (auto& [pod, p] : effective.entries) p /= total;
            const std::string pod_id = sample_pod(effective, rng_);
            for (const auto& p : view.pods) {
                if (p.pod_id == pod_id) return p;
            }
            throw core::NoLivePods("sampled pod vanished: " + pod_id);
        }
    }
    throw core::Error("unreachable strategy kind");
}

}  // namespace offload::strategy
