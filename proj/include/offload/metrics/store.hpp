#pragma once

#include <deque>
#include <map>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

#include "offload/core/types.hpp"

namespace offload::metrics {

/// One observation of a pod, collected at 5 Hz.
struct MetricsSample {
    std::string pod_id;
    core::Ms timestamp_ms = 0;
    double cpu_util = 0;  // [0, 1]
    double power_w = 0;
    std::vector<double> completed_rts_ms;  // responses finished since previous sample
};

/// Aggregates reported while a pod has no completed work yet.
struct ColdStart {
    double rt_ms = 0;
    double cpu = 0;
    double energy_mj = 0;

    static ColdStart for_spec(const core::NodeSpec& spec);
};

/// Sliding window of samples for one pod. Samples older than the horizon
/// are evicted on every insert.
class MetricsWindow {
public:
    MetricsWindow(std::string pod_id, core::NodeCategory category, ColdStart cold,
                  core::Ms horizon_ms = 5000);

    /// Appends a sample. Timestamps must be strictly increasing per pod;
    /// throws OutOfOrderSample otherwise.
    void record_sample(const MetricsSample& s);

    /// Mean of all completed response times in the window, or the cold-start
    /// default when nothing completed yet.
    double mean_rt() const;

    /// Mean cpu_util over the window's samples; 0 when empty.
    double mean_cpu() const;

    /// Power integral between consecutive samples divided by the number of
    /// completions in the window (mJ per task). Cold-start default when no
    /// completions. The first sample of a window contributes no energy.
    double energy_per_task() const;

    const std::string& pod_id() const { return pod_id_; }
    core::NodeCategory category() const { return category_; }
    core::Ms horizon_ms() const { return horizon_ms_; }
    std::size_t size() const { return samples_.size(); }
    const std::deque<MetricsSample>& samples() const { return samples_; }

private:
    std::string pod_id_;
    core::NodeCategory category_;
    ColdStart cold_;
    core::Ms horizon_ms_;
    std::deque<MetricsSample> samples_;
};

struct CategoryAggregate {
    double rt_ms = 0;
    double cpu = 0;
};

/// Unweighted mean of mean_rt / mean_cpu over the given category's windows.
/// Throws EmptyCategory when no window belongs to the category.
CategoryAggregate category_aggregate(const std::vector<const MetricsWindow*>& windows,
                                     core::NodeCategory c);

/// Nearest-rank percentile: element at index ceil(q/100 * n) - 1 of the
/// sorted values. Throws EmptyInput on an empty list.
double percentile(std::vector<double> values, double q);

/// Per-pod aggregate triple as consumed by the analyzer.
struct PodAggregate {
    std::string pod_id;
    core::NodeCategory category = core::NodeCategory::Small;
    double rt_ms = 0;
    double cpu = 0;
    double energy_mj = 0;
};

/// The monitor's knowledge base: one window per pod, one writer per pod
/// series, any number of concurrent readers.
class MetricsStore {
public:
    void register_pod(const std::string& pod_id, core::NodeCategory category, ColdStart cold,
                      core::Ms horizon_ms = 5000);
    void remove_pod(const std::string& pod_id);
    bool has_pod(const std::string& pod_id) const;

    void record(const MetricsSample& s);

    /// Consistent snapshot of every registered pod's aggregates.
    std::vector<PodAggregate> snapshot() const;

    std::vector<std::string> pod_ids() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, MetricsWindow> windows_;
};

/// CSV header + row format: timestamp_ms,pod_id,cpu_util,power_w,rt_count,rt_mean_ms
extern const char* const kMetricsCsvHeader;
void append_metrics_csv(std::ostream& out, const MetricsSample& s);

}  // namespace offload::metrics
