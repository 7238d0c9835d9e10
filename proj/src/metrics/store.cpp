#include "offload/metrics/store.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "offload/core/errors.hpp"

namespace offload::metrics {

ColdStart ColdStart::for_spec(const core::NodeSpec& spec) {
    ColdStart c;
    c.rt_ms = spec.base_service_time_ms;
    c.cpu = 0.0;
    // Midpoint power times base service time, in mJ (W * ms).
    c.energy_mj = 0.5 * (spec.power_idle_w + spec.power_busy_w) * spec.base_service_time_ms;
    return c;
}

MetricsWindow::MetricsWindow(std::string pod_id, core::NodeCategory category, ColdStart cold,
                             core::Ms horizon_ms)
    : pod_id_(std::move(pod_id)), category_(category), cold_(cold), horizon_ms_(horizon_ms) {}

void MetricsWindow::record_sample(const MetricsSample& s) {
    if (!samples_.empty() && s.timestamp_ms <= samples_.back().timestamp_ms) {
        throw core::OutOfOrderSample("sample for " + pod_id_ + " at " +
                                     std::to_string(s.timestamp_ms) + " not after " +
                                     std::to_string(samples_.back().timestamp_ms));
    }
    samples_.push_back(s);
    const core::Ms cutoff = s.timestamp_ms - horizon_ms_;
    while (!samples_.empty() && samples_.front().timestamp_ms < cutoff) {
        samples_.pop_front();
    }
}

double MetricsWindow::mean_rt() const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : samples_) {
        for (const double rt : s.completed_rts_ms) {
            sum += rt;
            ++n;
        }
    }
    if (n == 0) return cold_.rt_ms;
    return sum / static_cast<double>(n);
}

double MetricsWindow::mean_cpu() const {
    if (samples_.empty()) return cold_.cpu;
    double sum = 0;
    for (const auto& s : samples_) sum += s.cpu_util;
    return sum / static_cast<double>(samples_.size());
}

double MetricsWindow::energy_per_task() const {
    std::size_t completions = 0;
    for (const auto& s : samples_) completions += s.completed_rts_ms.size();
    if (completions == 0) return cold_.energy_mj;
    double energy_mj = 0;  // W * ms == mJ
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        const double dt = static_cast<double>(samples_[i].timestamp_ms - samples_[i - 1].timestamp_ms);
        energy_mj += samples_[i].power_w * dt;
    }
    return energy_mj / static_cast<double>(completions);
}

CategoryAggregate category_aggregate(const std::vector<const MetricsWindow*>& windows,
                                     core::NodeCategory c) {
    double rt = 0;
    double cpu = 0;
    std::size_t n = 0;
    for (const MetricsWindow* w : windows) {
        if (w->category() != c) continue;
        rt += w->mean_rt();
        cpu += w->mean_cpu();
        ++n;
    }
    if (n == 0) {
        throw core::EmptyCategory(std::string("no pods in category ") + core::to_string(c));
    }
    return {rt / static_cast<double>(n), cpu / static_cast<double>(n)};
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw core::EmptyInput("percentile of empty list");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n));
    if (rank == 0) rank = 1;
    return values[rank - 1];
}

void MetricsStore::register_pod(const std::string& pod_id, core::NodeCategory category,
                                ColdStart cold, core::Ms horizon_ms) {
    std::unique_lock lock(mu_);
    windows_.emplace(pod_id, MetricsWindow(pod_id, category, cold, horizon_ms));
}

void MetricsStore::remove_pod(const std::string& pod_id) {
    std::unique_lock lock(mu_);
    windows_.erase(pod_id);
}

bool MetricsStore::has_pod(const std::string& pod_id) const {
    std::shared_lock lock(mu_);
    return windows_.contains(pod_id);
}

void MetricsStore::record(const MetricsSample& s) {
    std::unique_lock lock(mu_);
    auto it = windows_.find(s.pod_id);
    if (it == windows_.end()) return;  // pod retired between poll and record
    it->second.record_sample(s);
}

std::vector<PodAggregate> MetricsStore::snapshot() const {
    std::shared_lock lock(mu_);
    std::vector<PodAggregate> out;
    out.reserve(windows_.size());
    for (const auto& [pod_id, w] : windows_) {
        out.push_back({pod_id, w.category(), w.mean_rt(), w.mean_cpu(), w.energy_per_task()});
    }
    return out;
}

std::vector<std::string> MetricsStore::pod_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    out.reserve(windows_.size());
    for (const auto& [pod_id, _] : windows_) out.push_back(pod_id);
    return out;
}

const char* const kMetricsCsvHeader = "timestamp_ms,pod_id,cpu_util,power_w,rt_count,rt_mean_ms";

void append_metrics_csv(std::ostream& out, const MetricsSample& s) {
    double rt_mean = 0;
    if (!s.completed_rts_ms.empty()) {
        for (const double rt : s.completed_rts_ms) rt_mean += rt;
        rt_mean /= static_cast<double>(s.completed_rts_ms.size());
    }
    out << s.timestamp_ms << ',' << s.pod_id << ',' << s.cpu_util << ',' << s.power_w << ','
        << s.completed_rts_ms.size() << ',' << rt_mean << '\n';
}

}  // namespace offload::metrics
