#pragma once

#include <deque>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "offload/core/report.hpp"
#include "offload/core/rng.hpp"
#include "offload/core/types.hpp"
#include "offload/mapek/loop.hpp"
#include "offload/metrics/store.hpp"
#include "offload/strategy/engine.hpp"

namespace offload::sim {

enum class EventKind : int {
    Arrival = 0,
    ServiceStart = 1,
    ServiceEnd = 2,
    MetricSample = 3,
    PhaseChange = 4,
    LoopTick = 5,
};

/// Events are processed in non-decreasing time order; ties break by kind
/// (enum order), then by insertion sequence.
struct SimEvent {
    core::Ms time_ms = 0;
    EventKind kind = EventKind::Arrival;
    std::uint64_t seq = 0;
    std::int32_t pod = -1;
    std::int32_t task = -1;
    core::Ms dispatch_ms = 0;
    core::Ms service_ms = 0;
    std::int32_t phase = -1;
};

struct NodeConfig {
    core::NodeSpec spec;
    int initial_replicas = 0;
};

struct SimScenario {
    std::vector<NodeConfig> nodes;
    std::vector<core::WorkloadPhase> phases;
    strategy::StrategyKind strategy = strategy::StrategyKind::PodLevel;
    core::StrategyWeights weights;
    std::uint64_t seed = 1;
    core::Ms loop_period_ms = 1000;
    core::Ms sample_period_ms = 200;
    core::Ms horizon_ms = 5000;
    mapek::Thresholds thresholds;
    mapek::ScalingBounds bounds;
    strategy::ProfileMapping mapping;
    bool normalize_metrics = true;
};

/// The standard three-phase scenario: 19 tags, RF 2/5/1 at 180 s each,
/// five pods per category spread over three nodes of each class.
SimScenario default_scenario(strategy::StrategyKind strategy, std::uint64_t seed);

/// Expands phases into the full arrival stream. Each tag gets one seeded
/// jitter offset per phase and then emits rf tasks every tag_period.
std::vector<core::Task> generate_workload(const std::vector<core::WorkloadPhase>& phases,
                                          std::uint64_t seed);

/// Lognormal service time with mean base_service_time_ms and the spec's
/// coefficient of variation; cv == 0 yields exactly the base value.
double draw_service_time(const core::NodeSpec& spec, core::Rng& rng);

/// Linear idle-to-busy power model.
double pod_power(const core::NodeSpec& spec, double util);

/// Busy core-milliseconds over an interval, as a utilization fraction.
double pod_cpu_util(double busy_core_ms, core::Ms interval_ms, int cores);

/// Energy attributed to one task: the pod's per-core draw at full load for
/// the task's service interval (W * ms == mJ).
double attribute_task_energy(const core::NodeSpec& spec, double service_ms);

struct SimStats {
    double total_power_integral_mj = 0;  // sum over pods of integrated power
    double total_attributed_mj = 0;      // sum of per-task attributed energy
    double busy_core_ms = 0;
};

struct RunResult {
    core::ExperimentReport report;
    std::vector<core::TaskOutcome> outcomes;
    std::vector<metrics::MetricsSample> samples;
    std::vector<mapek::IterationRecord> loop_records;
    std::map<std::string, core::NodeCategory> pod_categories;
    SimStats stats;
};

/// Deterministic discrete-event backend: heterogeneous pods with bounded
/// FIFO queues, per-pod multi-server service, power accounting, drops, and
/// the MAPE-K loop ticking inside simulated time.
class Simulator : public mapek::ClusterBackend {
public:
    explicit Simulator(SimScenario scenario);

    RunResult run();

    // mapek::ClusterBackend
    mapek::Snapshot monitor() override;
    int replica_count(core::NodeCategory c) const override;
    void apply_profile(std::shared_ptr<const core::ServiceProfile> profile) override;
    void scale_to(core::NodeCategory c, int target_replicas) override;
    core::Ms now_ms() const override { return now_ms_; }

    /// Processes the next pending event; test hook. Throws EmptyEventQueue.
    SimEvent step();
    bool has_events() const { return !events_.empty(); }
    core::Ms end_ms() const { return end_ms_; }
    int live_pod_count() const;

private:
    struct PendingTask {
        std::int32_t task = -1;
        core::Ms dispatch_ms = 0;
    };

    struct PodSim {
        core::PodRef ref;
        core::NodeSpec spec;
        bool live = true;
        std::uint64_t created_seq = 0;
        core::Ms created_ms = 0;
        std::deque<PendingTask> queue;
        int in_service = 0;
        int pending_starts = 0;
        core::Rng rng{0};
        double busy_core_ms = 0;
        core::Ms busy_updated_ms = 0;
        double busy_at_sample = 0;
        core::Ms last_sample_ms = 0;
        std::vector<double> rts_since_sample;
    };

    struct EventOrder {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time_ms != b.time_ms) return a.time_ms > b.time_ms;
            if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
            return a.seq > b.seq;
        }
    };

    void push_event(SimEvent ev);
    void handle_arrival(const SimEvent& ev);
    void handle_service_start(const SimEvent& ev);
    void handle_service_end(const SimEvent& ev);
    void handle_metric_sample(const SimEvent& ev);
    void handle_loop_tick(const SimEvent& ev);
    void enqueue_task(PodSim& pod, std::int32_t pod_idx, std::int32_t task_idx, core::Ms now);
    void update_busy(PodSim& pod, core::Ms now);
    std::int32_t add_pod(std::size_t node_idx, core::Ms now);
    void rebuild_view();
    void record_drop(const core::Task& task, core::Ms now);

    SimScenario scenario_;
    std::vector<core::Task> tasks_;
    std::vector<PodSim> pods_;
    std::map<std::string, std::int32_t> pod_index_;
    std::vector<int> node_pod_counts_;
    metrics::MetricsStore store_;
    strategy::Dispatcher dispatcher_;
    strategy::ClusterView view_;
    std::shared_ptr<const core::ServiceProfile> profile_;
    std::unique_ptr<mapek::MapekLoop> loop_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventOrder> events_;
    std::uint64_t event_seq_ = 0;
    std::uint64_t pod_seq_ = 0;
    core::Ms now_ms_ = 0;
    core::Ms end_ms_ = 0;

    std::vector<core::TaskOutcome> outcomes_;
    std::vector<metrics::MetricsSample> samples_;
    std::vector<mapek::IterationRecord> loop_records_;
    std::map<std::string, core::NodeCategory> pod_categories_;
    std::vector<core::TimelineRow> timeline_;
    std::int64_t completed_count_ = 0;
    std::int64_t dropped_count_ = 0;
    double attributed_mj_ = 0;
};

}  // namespace offload::sim
