#include "offload/live/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "offload/core/errors.hpp"
#include "offload/sim/simulator.hpp"

namespace offload::live {

namespace {

using steady = std::chrono::steady_clock;

struct HostPort {
    std::string host;
    int port = 0;
};

HostPort split_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw core::Error("bad address: " + address);
    return {address.substr(0, colon), std::stoi(address.substr(colon + 1))};
}

bool is_connection_error(httplib::Error e) {
    return e == httplib::Error::Connection || e == httplib::Error::ConnectionTimeout ||
           e == httplib::Error::BindIPAddress;
}

struct LiveRun {
    const LiveScenario& scenario;
    std::vector<core::Task> tasks;
    steady::time_point t0;

    std::vector<std::uint8_t> dead;  // per pod index
    std::atomic<int> dead_count{0};
    std::atomic<bool> abort{false};

    metrics::MetricsStore store;
    std::map<std::string, core::NodeCategory> pod_categories;

    std::mutex decision_mu;
    strategy::Dispatcher dispatcher;
    std::shared_ptr<const core::ServiceProfile> profile;

    std::mutex out_mu;
    std::vector<core::TaskOutcome> outcomes;
    std::map<std::string, double> worker_service_ms;
    std::atomic<std::int64_t> completed{0};
    std::atomic<std::int64_t> dropped{0};
    std::atomic<std::int64_t> generated{0};

    std::mutex sample_mu;
    std::vector<metrics::MetricsSample> samples;

    std::mutex queue_mu;
    std::condition_variable queue_cv;
    std::deque<std::size_t> queue;
    bool queue_closed = false;

    std::atomic<int> inflight{0};
    std::atomic<int> inflight_hwm{0};

    explicit LiveRun(const LiveScenario& s)
        : scenario(s),
          tasks(sim::generate_workload(s.phases, s.seed)),
          dead(s.pods.size(), 0),
          dispatcher(s.strategy, s.weights, s.seed) {
        for (const auto& pod : s.pods) {
            pod_categories[pod.pod_id] = pod.category;
            store.register_pod(pod.pod_id, pod.category,
                               metrics::ColdStart::for_spec(spec_for(pod)), s.horizon_ms);
        }
    }

    core::Ms elapsed() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(steady::now() - t0).count();
    }

    const core::NodeSpec& spec_for(const core::PodRef& pod) const {
        const auto it = scenario.node_specs.find(pod.node_id);
        if (it == scenario.node_specs.end()) {
            throw core::Error("no node spec for " + pod.node_id);
        }
        return it->second;
    }

    void mark_dead(const std::string& pod_id) {
        for (std::size_t i = 0; i < scenario.pods.size(); ++i) {
            if (scenario.pods[i].pod_id != pod_id || dead[i]) continue;
            dead[i] = 1;
            store.remove_pod(pod_id);
            const int dc = dead_count.fetch_add(1) + 1;
            if (dc * 2 > static_cast<int>(scenario.pods.size())) abort.store(true);
        }
    }

    strategy::ClusterView build_view() {
        strategy::ClusterView view;
        for (std::size_t i = 0; i < scenario.pods.size(); ++i) {
            if (!dead[i]) view.pods.push_back(scenario.pods[i]);
        }
        std::sort(view.pods.begin(), view.pods.end(),
                  [](const core::PodRef& a, const core::PodRef& b) { return a.pod_id < b.pod_id; });
        double rt_sum[2] = {0, 0}, cpu_sum[2] = {0, 0};
        std::size_t count[2] = {0, 0};
        for (const auto& agg : store.snapshot()) {
            const int idx = agg.category == core::NodeCategory::Small ? 0 : 1;
            rt_sum[idx] += agg.rt_ms;
            cpu_sum[idx] += agg.cpu;
            ++count[idx];
        }
        if (count[0]) {
            view.category_metrics[core::NodeCategory::Small] =
                strategy::CategoryMetrics{rt_sum[0] / count[0], cpu_sum[0] / count[0]};
        }
        if (count[1]) {
            view.category_metrics[core::NodeCategory::Medium] =
                strategy::CategoryMetrics{rt_sum[1] / count[1], cpu_sum[1] / count[1]};
        }
        view.profile = profile;
        return view;
    }

    void record_outcome(core::TaskOutcome outcome) {
        if (outcome.dropped) {
            dropped.fetch_add(1);
        } else {
            completed.fetch_add(1);
        }
        std::lock_guard lock(out_mu);
        outcomes.push_back(std::move(outcome));
    }

    void process_task(std::size_t idx) {
        const core::Task& task = tasks[idx];
        for (int attempt = 0; attempt < 2; ++attempt) {
            core::PodRef target;
            {
                std::lock_guard lock(decision_mu);
                try {
                    target = dispatcher.decide(task, build_view());
                } catch (const core::Error&) {
                    break;  // no live pods left
                }
            }
            const auto hp = split_address(target.address);
            httplib::Client client(hp.host, hp.port);
            client.set_connection_timeout(std::chrono::milliseconds(2000));
            client.set_read_timeout(std::chrono::milliseconds(scenario.dispatcher.timeout_ms));
            client.set_write_timeout(std::chrono::milliseconds(scenario.dispatcher.timeout_ms));

            const nlohmann::json body{{"task_id", task.task_id},
                                      {"tag_id", task.tag_id},
                                      {"replication_index", task.replication_index}};
            const core::Ms dispatch_ms = elapsed();
            const int now_inflight = inflight.fetch_add(1) + 1;
            int expected = inflight_hwm.load();
            while (now_inflight > expected &&
                   !inflight_hwm.compare_exchange_weak(expected, now_inflight)) {
            }
            const auto start = steady::now();
            auto res = client.Post("/infer", body.dump(), "application/json");
            const double rt_ms =
                std::chrono::duration<double, std::milli>(steady::now() - start).count();
            inflight.fetch_sub(1);

            if (res && res->status == 200) {
                const nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
                const double service_ms =
                    reply.is_object() && reply.contains("service_ms") ? reply["service_ms"].get<double>() : 0.0;
                core::TaskOutcome outcome;
                outcome.task_id = task.task_id;
                outcome.pod_id = target.pod_id;
                outcome.dispatch_time_ms = dispatch_ms;
                outcome.completion_time_ms = dispatch_ms + static_cast<core::Ms>(std::llround(rt_ms));
                outcome.response_time_ms = rt_ms;
                outcome.energy_mj = sim::attribute_task_energy(spec_for(target), service_ms);
                {
                    std::lock_guard lock(out_mu);
                    worker_service_ms[task.task_id] = service_ms;
                }
                record_outcome(std::move(outcome));
                return;
            }
            if (!res && is_connection_error(res.error()) && attempt == 0) {
                // Pod gone: mark it dead and re-decide exactly once.
                std::lock_guard lock(decision_mu);
                mark_dead(target.pod_id);
                continue;
            }
            break;  // timeout or repeated failure: drop
        }
        core::TaskOutcome outcome;
        outcome.task_id = task.task_id;
        outcome.dispatch_time_ms = elapsed();
        outcome.dropped = true;
        record_outcome(std::move(outcome));
    }
};

/// Live side of the loop contract; replica changes are out of scope for the
/// harness (workers are external processes), so scale_to only records intent.
class LiveBackend : public mapek::ClusterBackend {
public:
    explicit LiveBackend(LiveRun& run) : run_(&run) {}

    mapek::Snapshot monitor() override {
        mapek::Snapshot snapshot;
        for (const auto& agg : run_->store.snapshot()) {
            snapshot.push_back({agg.pod_id, agg.category, agg.rt_ms, agg.cpu, agg.energy_mj, 0.0});
        }
        return snapshot;
    }

    int replica_count(core::NodeCategory c) const override {
        int n = 0;
        for (std::size_t i = 0; i < run_->scenario.pods.size(); ++i) {
            if (!run_->dead[i] && run_->scenario.pods[i].category == c) ++n;
        }
        return n;
    }

    void apply_profile(std::shared_ptr<const core::ServiceProfile> profile) override {
        std::lock_guard lock(run_->decision_mu);
        run_->profile = std::move(profile);
    }

    void scale_to(core::NodeCategory, int) override {}

    core::Ms now_ms() const override { return run_->elapsed(); }

private:
    LiveRun* run_;
};

void health_check(const LiveScenario& scenario) {
    for (const auto& pod : scenario.pods) {
        const auto hp = split_address(pod.address);
        bool ok = false;
        for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
            httplib::Client client(hp.host, hp.port);
            client.set_connection_timeout(std::chrono::milliseconds(250));
            if (auto res = client.Get("/metrics"); res && res->status == 200) ok = true;
            if (!ok) std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
        if (!ok) {
            throw core::BackendUnavailable("worker " + pod.pod_id + " unreachable at " + pod.address);
        }
    }
}

}  // namespace

void DispatcherConfig::validate() const {
    if (max_in_flight < 1) throw core::Error("max_in_flight must be >= 1");
    if (timeout_ms <= 0) throw core::Error("timeout_ms must be positive");
    if (poll_period_ms <= 0) throw core::Error("poll_period_ms must be positive");
}

LiveRunResult run_live_experiment(const LiveScenario& scenario) {
    scenario.weights.validate();
    scenario.dispatcher.validate();
    if (scenario.pods.empty()) throw core::NoLivePods("live scenario has no pods");
    health_check(scenario);

    LiveRun run(scenario);
    LiveBackend backend(run);

    mapek::LoopConfig loop_cfg;
    loop_cfg.period_ms = scenario.loop_period_ms;
    loop_cfg.thresholds = scenario.thresholds;
    loop_cfg.bounds = scenario.bounds;
    loop_cfg.weights = scenario.weights;
    loop_cfg.strategy = scenario.strategy;
    loop_cfg.mapping = scenario.mapping;
    loop_cfg.normalize_metrics = scenario.normalize_metrics;
    mapek::MapekLoop loop(loop_cfg, backend);

    std::mutex record_mu;
    std::vector<mapek::IterationRecord> loop_records;
    std::vector<core::TimelineRow> timeline;

    run.t0 = steady::now();
    const auto on_iteration = [&](const mapek::IterationRecord& record) {
        core::TimelineRow row;
        row.timestamp_ms = record.ts;
        row.completed = run.completed.load();
        row.dropped = run.dropped.load();
        double cpu_sum[2] = {0, 0};
        std::size_t count[2] = {0, 0};
        for (const auto& agg : run.store.snapshot()) {
            const int idx = agg.category == core::NodeCategory::Small ? 0 : 1;
            cpu_sum[idx] += agg.cpu;
            ++count[idx];
        }
        row.cpu_small = count[0] ? cpu_sum[0] / count[0] : 0.0;
        row.cpu_medium = count[1] ? cpu_sum[1] / count[1] : 0.0;
        std::lock_guard lock(record_mu);
        loop_records.push_back(record);
        timeline.push_back(row);
    };
    on_iteration(loop.iterate());  // profile exists before the first dispatch

    std::atomic<bool> stop_loop{false};
    std::thread loop_thread([&] { mapek::run_loop(loop, stop_loop, on_iteration); });

    std::atomic<bool> stop_poller{false};
    std::thread poller([&] {
        std::int64_t tick = 1;
        while (!stop_poller.load()) {
            const auto target = run.t0 + std::chrono::milliseconds(tick * scenario.dispatcher.poll_period_ms);
            while (!stop_poller.load() && steady::now() < target) {
                std::this_thread::sleep_for(std::chrono::milliseconds(2));
            }
            if (stop_poller.load()) break;
            for (std::size_t i = 0; i < scenario.pods.size(); ++i) {
                if (run.dead[i]) continue;
                const auto& pod = scenario.pods[i];
                const auto hp = split_address(pod.address);
                httplib::Client client(hp.host, hp.port);
                client.set_connection_timeout(std::chrono::milliseconds(150));
                client.set_read_timeout(std::chrono::milliseconds(150));
                auto res = client.Get("/metrics");
                if (!res || res->status != 200) continue;  // skipped, never queued
                const nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
                if (body.is_discarded()) continue;
                metrics::MetricsSample sample;
                sample.pod_id = pod.pod_id;
                sample.timestamp_ms = tick * scenario.dispatcher.poll_period_ms;
                sample.cpu_util = body.value("cpu_util", 0.0);
                sample.power_w = body.value("power_w", 0.0);
                sample.completed_rts_ms = body.value("completed_rts_ms", std::vector<double>{});
                try {
                    run.store.record(sample);
                } catch (const core::OutOfOrderSample&) {
                    continue;
                }
                std::lock_guard lock(run.sample_mu);
                run.samples.push_back(std::move(sample));
            }
            // A poll that overran its slot is skipped, not queued.
            const auto now_elapsed = run.elapsed();
            tick = std::max<std::int64_t>(tick + 1, now_elapsed / scenario.dispatcher.poll_period_ms + 1);
        }
    });

    std::vector<std::thread> pool;
    pool.reserve(scenario.dispatcher.max_in_flight);
    for (int i = 0; i < scenario.dispatcher.max_in_flight; ++i) {
        pool.emplace_back([&] {
            while (true) {
                std::size_t idx;
                {
                    std::unique_lock lock(run.queue_mu);
                    run.queue_cv.wait(lock, [&] { return !run.queue.empty() || run.queue_closed; });
                    if (run.queue.empty()) return;
                    idx = run.queue.front();
                    run.queue.pop_front();
                }
                run.process_task(idx);
            }
        });
    }

    // Generator: feed tasks at their wall-clock arrival offsets.
    for (std::size_t i = 0; i < run.tasks.size() && !run.abort.load(); ++i) {
        const auto target = run.t0 + std::chrono::milliseconds(run.tasks[i].arrival_time_ms);
        std::this_thread::sleep_until(target);
        if (run.abort.load()) break;
        run.generated.fetch_add(1);
        {
            std::lock_guard lock(run.queue_mu);
            run.queue.push_back(i);
        }
        run.queue_cv.notify_one();
    }

    {
        std::lock_guard lock(run.queue_mu);
        run.queue_closed = true;
    }
    run.queue_cv.notify_all();
    for (auto& t : pool) t.join();

    stop_loop.store(true);
    stop_poller.store(true);
    loop_thread.join();
    poller.join();

    core::ReportInputs inputs;
    inputs.strategy_name = strategy::to_string(scenario.strategy);
    inputs.seed = scenario.seed;
    inputs.total_generated = run.generated.load();
    inputs.in_flight = run.generated.load() - run.completed.load() - run.dropped.load();
    inputs.aborted = run.abort.load();
    inputs.phases = scenario.phases;
    inputs.outcomes = &run.outcomes;
    inputs.samples = &run.samples;
    inputs.pod_categories = &run.pod_categories;
    inputs.timeline = timeline;

    LiveRunResult result;
    result.report = core::build_report(inputs);
    result.outcomes = std::move(run.outcomes);
    result.samples = std::move(run.samples);
    result.loop_records = std::move(loop_records);
    result.pod_categories = run.pod_categories;
    result.dispatcher_inflight_hwm = run.inflight_hwm.load();
    result.worker_service_ms = std::move(run.worker_service_ms);
    return result;
}

}  // namespace offload::live
