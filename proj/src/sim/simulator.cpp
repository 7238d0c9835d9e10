#include "offload/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "offload/core/errors.hpp"

namespace offload::sim {

SimScenario default_scenario(strategy::StrategyKind strategy, std::uint64_t seed) {
    SimScenario s;
    s.strategy = strategy;
    s.seed = seed;
    s.nodes = {
        {core::NodeSpec::small_default("pi-1"), 2},
        {core::NodeSpec::small_default("pi-2"), 2},
        {core::NodeSpec::small_default("pi-3"), 1},
        {core::NodeSpec::medium_default("pn-1"), 2},
        {core::NodeSpec::medium_default("pn-2"), 2},
        {core::NodeSpec::medium_default("pn-3"), 1},
    };
    s.phases = {
        {.rf = 2, .duration_s = 180.0},
        {.rf = 5, .duration_s = 180.0},
        {.rf = 1, .duration_s = 180.0},
    };
    // Softmax keeps the slow tier's share low enough that its pods stay
    // clear of their queue bounds; a 12 s window smooths the feedback.
    s.mapping.kind = strategy::ProfileMapping::Kind::Softmax;
    s.mapping.temperature = 0.2;
    s.horizon_ms = 12000;
    return s;
}

std::vector<core::Task> generate_workload(const std::vector<core::WorkloadPhase>& phases,
                                          std::uint64_t seed) {
    if (phases.empty()) throw core::EmptyInput("no workload phases");
    core::Rng rng(core::derive_seed(seed, "workload"));
    struct Emission {
        core::Ms t;
        int tag;
        int repl;
    };
    std::vector<Emission> emissions;
    core::Ms phase_start = 0;
    for (const auto& phase : phases) {
        phase.validate();
        const auto period_ms = static_cast<core::Ms>(std::llround(phase.tag_period_s * 1000.0));
        const auto duration_ms = static_cast<core::Ms>(std::llround(phase.duration_s * 1000.0));
        for (int tag = 0; tag < phase.tag_count; ++tag) {
            const auto jitter = static_cast<core::Ms>(std::floor(rng.uniform(static_cast<double>(period_ms))));
            for (core::Ms t = phase_start + jitter; t < phase_start + duration_ms; t += period_ms) {
                for (int r = 0; r < phase.rf; ++r) {
                    emissions.push_back({t, tag, r});
                }
            }
        }
        phase_start += duration_ms;
    }
    std::stable_sort(emissions.begin(), emissions.end(), [](const Emission& a, const Emission& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.tag != b.tag) return a.tag < b.tag;
        return a.repl < b.repl;
    });
    std::vector<core::Task> tasks;
    tasks.reserve(emissions.size());
    char buf[32];
    for (std::size_t i = 0; i < emissions.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "t-%06zu", i);
        tasks.push_back(core::Task{buf, "tag-" + std::to_string(emissions[i].tag), emissions[i].t,
                                   emissions[i].repl});
    }
    return tasks;
}

double draw_service_time(const core::NodeSpec& spec, core::Rng& rng) {
    return rng.lognormal(spec.base_service_time_ms, spec.service_time_cv);
}

double pod_power(const core::NodeSpec& spec, double util) {
    return spec.power_idle_w + util * (spec.power_busy_w - spec.power_idle_w);
}

double pod_cpu_util(double busy_core_ms, core::Ms interval_ms, int cores) {
    if (interval_ms <= 0 || cores <= 0) return 0.0;
    const double util = busy_core_ms / (static_cast<double>(interval_ms) * cores);
    return std::clamp(util, 0.0, 1.0);
}

double attribute_task_energy(const core::NodeSpec& spec, double service_ms) {
    return spec.power_busy_w / spec.cores * service_ms;
}

Simulator::Simulator(SimScenario scenario)
    : scenario_(std::move(scenario)),
      dispatcher_(scenario_.strategy, scenario_.weights, scenario_.seed) {
    scenario_.weights.validate();
    if (scenario_.nodes.empty()) throw core::Error("scenario has no nodes");
    for (const auto& n : scenario_.nodes) n.spec.validate();

    tasks_ = generate_workload(scenario_.phases, scenario_.seed);
    core::Ms phase_start = 0;
    std::int32_t phase_idx = 0;
    for (const auto& phase : scenario_.phases) {
        push_event({.time_ms = phase_start, .kind = EventKind::PhaseChange, .phase = phase_idx++});
        phase_start += static_cast<core::Ms>(std::llround(phase.duration_s * 1000.0));
    }
    end_ms_ = phase_start;

    node_pod_counts_.assign(scenario_.nodes.size(), 0);
    for (std::size_t node = 0; node < scenario_.nodes.size(); ++node) {
        for (int r = 0; r < scenario_.nodes[node].initial_replicas; ++r) {
            add_pod(node, 0);
        }
    }

    mapek::LoopConfig loop_cfg;
    loop_cfg.period_ms = scenario_.loop_period_ms;
    loop_cfg.thresholds = scenario_.thresholds;
    loop_cfg.bounds = scenario_.bounds;
    loop_cfg.weights = scenario_.weights;
    loop_cfg.strategy = scenario_.strategy;
    loop_cfg.mapping = scenario_.mapping;
    loop_cfg.normalize_metrics = scenario_.normalize_metrics;
    loop_ = std::make_unique<mapek::MapekLoop>(loop_cfg, *this);

    // Bootstrap pass on the cold knowledge base so a profile exists before
    // the first arrival; subsequent passes ride LoopTick events.
    loop_records_.push_back(loop_->iterate());
    rebuild_view();

    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        push_event({.time_ms = tasks_[i].arrival_time_ms,
                    .kind = EventKind::Arrival,
                    .task = static_cast<std::int32_t>(i)});
    }
    if (scenario_.sample_period_ms > 0 && scenario_.sample_period_ms <= end_ms_) {
        push_event({.time_ms = scenario_.sample_period_ms, .kind = EventKind::MetricSample});
    }
    if (scenario_.loop_period_ms > 0 && scenario_.loop_period_ms <= end_ms_) {
        push_event({.time_ms = scenario_.loop_period_ms, .kind = EventKind::LoopTick});
    }
}

void Simulator::push_event(SimEvent ev) {
    ev.seq = event_seq_++;
    events_.push(ev);
}

std::int32_t Simulator::add_pod(std::size_t node_idx, core::Ms now) {
    const auto& node = scenario_.nodes[node_idx];
    PodSim pod;
    pod.spec = node.spec;
    pod.ref.node_id = node.spec.node_id;
    pod.ref.category = node.spec.category;
    pod.ref.pod_id = node.spec.node_id + "-p" + std::to_string(++node_pod_counts_[node_idx]);
    pod.created_seq = pod_seq_++;
    pod.created_ms = now;
    pod.busy_updated_ms = now;
    pod.last_sample_ms = now;
    pod.rng = core::Rng(core::derive_seed(scenario_.seed, "pod:" + pod.ref.pod_id));
    const auto idx = static_cast<std::int32_t>(pods_.size());
    pod_index_[pod.ref.pod_id] = idx;
    pod_categories_[pod.ref.pod_id] = pod.ref.category;
    store_.register_pod(pod.ref.pod_id, pod.ref.category, metrics::ColdStart::for_spec(pod.spec),
                        scenario_.horizon_ms);
    pods_.push_back(std::move(pod));
    return idx;
}

void Simulator::rebuild_view() {
    view_.pods.clear();
    for (const auto& pod : pods_) {
        if (pod.live) view_.pods.push_back(pod.ref);
    }
    std::sort(view_.pods.begin(), view_.pods.end(),
              [](const core::PodRef& a, const core::PodRef& b) { return a.pod_id < b.pod_id; });
    view_.category_metrics.clear();
    const auto snapshot = store_.snapshot();
    double rt_sum[2] = {0, 0}, cpu_sum[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (const auto& agg : snapshot) {
        const int idx = agg.category == core::NodeCategory::Small ? 0 : 1;
        rt_sum[idx] += agg.rt_ms;
        cpu_sum[idx] += agg.cpu;
        ++count[idx];
    }
    if (count[0]) {
        view_.category_metrics[core::NodeCategory::Small] =
            strategy::CategoryMetrics{rt_sum[0] / count[0], cpu_sum[0] / count[0]};
    }
    if (count[1]) {
        view_.category_metrics[core::NodeCategory::Medium] =
            strategy::CategoryMetrics{rt_sum[1] / count[1], cpu_sum[1] / count[1]};
    }
    view_.profile = profile_;
}

mapek::Snapshot Simulator::monitor() {
    mapek::Snapshot snapshot;
    for (const auto& agg : store_.snapshot()) {
        mapek::PodSnapshot ps;
        ps.pod_id = agg.pod_id;
        ps.category = agg.category;
        ps.rt_ms = agg.rt_ms;
        ps.cpu = agg.cpu;
        ps.energy_mj = agg.energy_mj;
        const auto it = pod_index_.find(agg.pod_id);
        if (it != pod_index_.end()) {
            const PodSim& pod = pods_[it->second];
            ps.queue_frac = static_cast<double>(pod.queue.size()) / pod.spec.queue_capacity;
        }
        snapshot.push_back(std::move(ps));
    }
    return snapshot;
}

int Simulator::replica_count(core::NodeCategory c) const {
    int n = 0;
    for (const auto& pod : pods_) {
        if (pod.live && pod.ref.category == c) ++n;
    }
    return n;
}

int Simulator::live_pod_count() const {
    int n = 0;
    for (const auto& pod : pods_) {
        if (pod.live) ++n;
    }
    return n;
}

void Simulator::apply_profile(std::shared_ptr<const core::ServiceProfile> profile) {
    profile_ = std::move(profile);
    view_.profile = profile_;
}

void Simulator::scale_to(core::NodeCategory c, int target_replicas) {
    int current = replica_count(c);
    while (current < target_replicas) {
        // Place the new pod on the category node with the fewest pods.
        std::size_t best = scenario_.nodes.size();
        for (std::size_t i = 0; i < scenario_.nodes.size(); ++i) {
            if (scenario_.nodes[i].spec.category != c) continue;
            if (best == scenario_.nodes.size() || node_pod_counts_[i] < node_pod_counts_[best]) {
                best = i;
            }
        }
        if (best == scenario_.nodes.size()) return;  // no node of this category
        add_pod(best, now_ms_);
        ++current;
    }
    while (current > target_replicas) {
        // Retire the most recently created live pod; it drains its queue.
        std::int32_t victim = -1;
        for (std::size_t i = 0; i < pods_.size(); ++i) {
            if (!pods_[i].live || pods_[i].ref.category != c) continue;
            if (victim < 0 || pods_[i].created_seq > pods_[victim].created_seq) {
                victim = static_cast<std::int32_t>(i);
            }
        }
        if (victim < 0) return;
        pods_[victim].live = false;
        store_.remove_pod(pods_[victim].ref.pod_id);
        --current;
    }
    rebuild_view();
}

void Simulator::update_busy(PodSim& pod, core::Ms now) {
    pod.busy_core_ms += static_cast<double>(pod.in_service) * (now - pod.busy_updated_ms);
    pod.busy_updated_ms = now;
}

void Simulator::record_drop(const core::Task& task, core::Ms now) {
    core::TaskOutcome outcome;
    outcome.task_id = task.task_id;
    outcome.dispatch_time_ms = now;
    outcome.dropped = true;
    outcomes_.push_back(std::move(outcome));
    ++dropped_count_;
}

void Simulator::enqueue_task(PodSim& pod, std::int32_t pod_idx, std::int32_t task_idx, core::Ms now) {
    const int waiting = static_cast<int>(pod.queue.size()) - pod.pending_starts;
    if (waiting >= pod.spec.queue_capacity) {
        record_drop(tasks_[task_idx], now);
        return;
    }
    pod.queue.push_back({task_idx, now});
    if (pod.in_service + pod.pending_starts < pod.spec.cores) {
        ++pod.pending_starts;
        push_event({.time_ms = now, .kind = EventKind::ServiceStart, .pod = pod_idx});
    }
}

void Simulator::handle_arrival(const SimEvent& ev) {
    const core::Task& task = tasks_[ev.task];
    const core::PodRef target = dispatcher_.decide(task, view_);
    const auto idx = pod_index_.at(target.pod_id);
    enqueue_task(pods_[idx], idx, ev.task, ev.time_ms);
}

void Simulator::handle_service_start(const SimEvent& ev) {
    PodSim& pod = pods_[ev.pod];
    pod.pending_starts = std::max(0, pod.pending_starts - 1);
    if (pod.queue.empty() || pod.in_service >= pod.spec.cores) return;
    const PendingTask pending = pod.queue.front();
    pod.queue.pop_front();
    update_busy(pod, ev.time_ms);
    ++pod.in_service;
    const double drawn = draw_service_time(pod.spec, pod.rng);
    const auto service_ms = std::max<core::Ms>(1, std::llround(drawn));
    push_event({.time_ms = ev.time_ms + service_ms,
                .kind = EventKind::ServiceEnd,
                .pod = ev.pod,
                .task = pending.task,
                .dispatch_ms = pending.dispatch_ms,
                .service_ms = service_ms});
}

void Simulator::handle_service_end(const SimEvent& ev) {
    PodSim& pod = pods_[ev.pod];
    update_busy(pod, ev.time_ms);
    --pod.in_service;

    const core::Task& task = tasks_[ev.task];
    core::TaskOutcome outcome;
    outcome.task_id = task.task_id;
    outcome.pod_id = pod.ref.pod_id;
    outcome.dispatch_time_ms = ev.dispatch_ms;
    outcome.completion_time_ms = ev.time_ms;
    outcome.response_time_ms = static_cast<double>(ev.time_ms - ev.dispatch_ms);
    outcome.energy_mj = attribute_task_energy(pod.spec, static_cast<double>(ev.service_ms));
    attributed_mj_ += outcome.energy_mj;
    pod.rts_since_sample.push_back(outcome.response_time_ms);
    outcomes_.push_back(std::move(outcome));
    ++completed_count_;

    if (!pod.queue.empty() && pod.in_service + pod.pending_starts < pod.spec.cores) {
        ++pod.pending_starts;
        push_event({.time_ms = ev.time_ms, .kind = EventKind::ServiceStart, .pod = ev.pod});
    }
}

void Simulator::handle_metric_sample(const SimEvent& ev) {
    for (std::size_t i = 0; i < pods_.size(); ++i) {
        PodSim& pod = pods_[i];
        if (!pod.live) continue;
        update_busy(pod, ev.time_ms);
        const core::Ms interval = ev.time_ms - pod.last_sample_ms;
        if (interval <= 0) continue;
        const double busy_delta = pod.busy_core_ms - pod.busy_at_sample;
        metrics::MetricsSample sample;
        sample.pod_id = pod.ref.pod_id;
        sample.timestamp_ms = ev.time_ms;
        sample.cpu_util = pod_cpu_util(busy_delta, interval, pod.spec.cores);
        sample.power_w = pod_power(pod.spec, sample.cpu_util);
        sample.completed_rts_ms = std::move(pod.rts_since_sample);
        pod.rts_since_sample.clear();
        pod.busy_at_sample = pod.busy_core_ms;
        pod.last_sample_ms = ev.time_ms;
        store_.record(sample);
        samples_.push_back(std::move(sample));
    }
    const core::Ms next = ev.time_ms + scenario_.sample_period_ms;
    if (next <= end_ms_) {
        push_event({.time_ms = next, .kind = EventKind::MetricSample});
    }
}

void Simulator::handle_loop_tick(const SimEvent& ev) {
    loop_records_.push_back(loop_->iterate());
    rebuild_view();

    core::TimelineRow row;
    row.timestamp_ms = ev.time_ms;
    row.completed = completed_count_;
    row.dropped = dropped_count_;
    const auto snapshot = store_.snapshot();
    double cpu_sum[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (const auto& agg : snapshot) {
        const int idx = agg.category == core::NodeCategory::Small ? 0 : 1;
        cpu_sum[idx] += agg.cpu;
        ++count[idx];
    }
    row.cpu_small = count[0] ? cpu_sum[0] / count[0] : 0.0;
    row.cpu_medium = count[1] ? cpu_sum[1] / count[1] : 0.0;
    timeline_.push_back(row);

    const core::Ms next = ev.time_ms + scenario_.loop_period_ms;
    if (next <= end_ms_) {
        push_event({.time_ms = next, .kind = EventKind::LoopTick});
    }
}

SimEvent Simulator::step() {
    if (events_.empty()) throw core::EmptyEventQueue("no pending events");
    const SimEvent ev = events_.top();
    events_.pop();
    now_ms_ = ev.time_ms;
    switch (ev.kind) {
        case EventKind::Arrival: handle_arrival(ev); break;
        case EventKind::ServiceStart: handle_service_start(ev); break;
        case EventKind::ServiceEnd: handle_service_end(ev); break;
        case EventKind::MetricSample: handle_metric_sample(ev); break;
        case EventKind::PhaseChange: break;  // boundary marker; stats use task times
        case EventKind::LoopTick: handle_loop_tick(ev); break;
    }
    return ev;
}

RunResult Simulator::run() {
    while (!events_.empty() && events_.top().time_ms <= end_ms_) {
        step();
    }

    std::int64_t in_flight = 0;
    SimStats stats;
    for (auto& pod : pods_) {
        update_busy(pod, end_ms_);
        in_flight += pod.in_service + static_cast<std::int64_t>(pod.queue.size());
        stats.busy_core_ms += pod.busy_core_ms;
        const double idle_mj = pod.spec.power_idle_w * static_cast<double>(end_ms_ - pod.created_ms);
        const double dynamic_mj = (pod.spec.power_busy_w - pod.spec.power_idle_w) *
                                  pod.busy_core_ms / pod.spec.cores;
        stats.total_power_integral_mj += idle_mj + dynamic_mj;
    }
    stats.total_attributed_mj = attributed_mj_;

    core::ReportInputs inputs;
    inputs.strategy_name = strategy::to_string(scenario_.strategy);
    inputs.seed = scenario_.seed;
    inputs.total_generated = static_cast<std::int64_t>(tasks_.size());
    inputs.in_flight = in_flight;
    inputs.phases = scenario_.phases;
    inputs.outcomes = &outcomes_;
    inputs.samples = &samples_;
    inputs.pod_categories = &pod_categories_;
    inputs.timeline = timeline_;

    RunResult result;
    result.report = core::build_report(inputs);
    result.outcomes = std::move(outcomes_);
    result.samples = std::move(samples_);
    result.loop_records = std::move(loop_records_);
    result.pod_categories = pod_categories_;
    result.stats = stats;
    return result;
}

}  // namespace offload::sim
