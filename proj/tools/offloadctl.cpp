#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "offload/cli/config.hpp"
#include "offload/core/errors.hpp"
#include "offload/live/worker.hpp"

namespace {

namespace fs = std::filesystem;
using namespace offload;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

std::string fmt_ms(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string fmt_mj(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
}

std::string fmt_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", v);
    return buf;
}

struct RunArtifacts {
    core::ExperimentReport report;
    std::vector<core::TaskOutcome> outcomes;
    std::vector<metrics::MetricsSample> samples;
    std::vector<mapek::IterationRecord> loop_records;
};

void write_artifacts(const fs::path& dir, const RunArtifacts& run) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "report.json");
        out << nlohmann::json(run.report).dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "outcomes.csv");
        out << core::kOutcomesCsvHeader << '\n';
        for (const auto& o : run.outcomes) core::append_outcome_csv(out, o);
    }
    {
        std::ofstream out(dir / "metrics.csv");
        out << metrics::kMetricsCsvHeader << '\n';
        for (const auto& s : run.samples) metrics::append_metrics_csv(out, s);
    }
    {
        std::ofstream out(dir / "events.jsonl");
        for (const auto& record : run.loop_records) {
            out << nlohmann::json(record).dump() << '\n';
        }
    }
}

RunArtifacts run_backend(const cli::ScenarioConfig& config) {
    RunArtifacts artifacts;
    if (config.backend == "sim") {
        sim::Simulator simulator(cli::to_sim_scenario(config));
        auto result = simulator.run();
        artifacts.report = std::move(result.report);
        artifacts.outcomes = std::move(result.outcomes);
        artifacts.samples = std::move(result.samples);
        artifacts.loop_records = std::move(result.loop_records);
    } else {
        auto result = live::run_live_experiment(cli::to_live_scenario(config));
        artifacts.report = std::move(result.report);
        artifacts.outcomes = std::move(result.outcomes);
        artifacts.samples = std::move(result.samples);
        artifacts.loop_records = std::move(result.loop_records);
    }
    return artifacts;
}

void print_summary(const core::ExperimentReport& r) {
    std::cout << "strategy: " << r.strategy_name << " (seed " << r.seed << ")\n"
              << "  tasks: " << r.total_tasks << "  completed: " << r.completed_tasks
              << "  drops: " << r.drop_count << "  in-flight: " << r.in_flight_tasks << '\n'
              << "  avg rt: " << fmt_ms(r.avg_rt_ms) << " ms  p99: " << fmt_ms(r.p99_rt_ms)
              << " ms  energy/task: " << fmt_mj(r.energy_per_task_mj) << " mJ\n";
    for (const auto& [cat, util] : r.per_category_utilization) {
        std::cout << "  mean cpu " << core::to_string(cat) << ": " << fmt_ms(util * 100.0) << "%\n";
    }
}

int cmd_run(const std::string& config_path, const std::string& strategy_override,
            std::int64_t seed_override, const std::string& out_override) {
    cli::ScenarioConfig config = cli::load_config_file(config_path);
    if (!strategy_override.empty()) {
        config.strategy = strategy::strategy_from_string(strategy_override);
    }
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_override.empty()) config.output_dir = out_override;
    if (const char* env = std::getenv("OFFLOAD_OUTPUT_DIR"); env && out_override.empty()) {
        config.output_dir = env;
    }

    const RunArtifacts artifacts = run_backend(config);
    write_artifacts(config.output_dir, artifacts);
    print_summary(artifacts.report);
    std::cout << "artifacts written to " << config.output_dir << '\n';
    return kExitOk;
}

int cmd_compare(const std::string& config_path, std::vector<std::string> strategies,
                std::int64_t seed_override, const std::string& out_override) {
    if (strategies.size() < 2) {
        std::cerr << "compare needs at least two --strategy values\n";
        return kExitConfig;
    }
    cli::ScenarioConfig config = cli::load_config_file(config_path);
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_override.empty()) config.output_dir = out_override;

    // One seed across strategies: differences are policy, not workload noise.
    std::vector<core::ExperimentReport> reports;
    for (const auto& name : strategies) {
        cli::ScenarioConfig one = config;
        one.strategy = strategy::strategy_from_string(name);
        const RunArtifacts artifacts = run_backend(one);
        write_artifacts(fs::path(config.output_dir) / name, artifacts);
        reports.push_back(artifacts.report);
    }

    std::printf("%-18s %12s %12s %12s %8s\n", "Strategy", "Avg RT (ms)", "99th% (ms)",
                "Energy (mJ)", "Drops");
    for (const auto& r : reports) {
        std::printf("%-18s %12s %12s %12s %8lld\n", r.strategy_name.c_str(),
                    fmt_ms(r.avg_rt_ms).c_str(), fmt_ms(r.p99_rt_ms).c_str(),
                    fmt_mj(r.energy_per_task_mj).c_str(), static_cast<long long>(r.drop_count));
    }
    const auto& base = reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const auto& r = reports[i];
        const auto delta = [](double now, double ref) {
            return ref != 0 ? (now - ref) / ref * 100.0 : 0.0;
        };
        std::printf("%-18s %12s %12s %12s %+8lld\n",
                    ("  vs " + base.strategy_name).c_str(),
                    fmt_pct(delta(r.avg_rt_ms, base.avg_rt_ms)).c_str(),
                    fmt_pct(delta(r.p99_rt_ms, base.p99_rt_ms)).c_str(),
                    fmt_pct(delta(r.energy_per_task_mj, base.energy_per_task_mj)).c_str(),
                    static_cast<long long>(r.drop_count - base.drop_count));
    }
    return kExitOk;
}

int cmd_report(const std::string& dir) {
    const fs::path report_path = fs::path(dir) / "report.json";
    const fs::path outcomes_path = fs::path(dir) / "outcomes.csv";
    if (!fs::exists(report_path) || !fs::exists(outcomes_path)) {
        throw core::MissingArtifacts("no run artifacts in " + dir);
    }
    std::ifstream in(report_path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw core::MissingArtifacts("unreadable report.json in " + dir);
    const auto report = j.get<core::ExperimentReport>();

    print_summary(report);
    std::cout << "per-phase breakdown:\n";
    for (const auto& phase : report.phases) {
        std::cout << "  rf=" << phase.rf << " [" << phase.start_ms << ", " << phase.end_ms
                  << ") ms: tasks " << phase.tasks << ", completed " << phase.completed
                  << ", drops: " << phase.drops << ", avg rt " << fmt_ms(phase.avg_rt_ms)
                  << " ms, p99 " << fmt_ms(phase.p99_rt_ms) << " ms, energy/task "
                  << fmt_mj(phase.energy_per_task_mj) << " mJ\n";
    }
    return kExitOk;
}

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

int cmd_worker(const std::string& host, int port, const std::string& category,
               const std::string& node_id, double base_ms, double cv, int cores, double idle_w,
               double busy_w, std::int64_t seed) {
    live::WorkerConfig config;
    config.host = host;
    config.port = port;
    config.spec = category == "small" ? core::NodeSpec::small_default(node_id)
                                      : core::NodeSpec::medium_default(node_id);
    if (base_ms > 0) config.spec.base_service_time_ms = base_ms;
    if (cv >= 0) config.spec.service_time_cv = cv;
    if (cores > 0) config.spec.cores = cores;
    if (idle_w > 0) config.spec.power_idle_w = idle_w;
    if (busy_w > 0) config.spec.power_busy_w = busy_w;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);

    live::Worker worker(std::move(config));
    worker.start();
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cout << "worker listening on " << worker.address() << std::endl;
    while (!g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    worker.stop();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-adaptive task offloading for heterogeneous edge clusters"};
    app.require_subcommand(1);

    std::string config_path;
    std::string strategy_override;
    std::vector<std::string> strategies;
    std::int64_t seed_override = -1;
    std::string out_override;
    std::string run_dir;

    auto* run = app.add_subcommand("run", "Run one scenario and write its artifacts");
    run->add_option("--config", config_path, "Scenario JSON")->required();
    run->add_option("--strategy", strategy_override, "Override the scenario strategy");
    run->add_option("--seed", seed_override, "Override the scenario seed");
    run->add_option("--out", out_override, "Override the output directory");

    auto* compare = app.add_subcommand("compare", "Run several strategies on the same scenario");
    compare->add_option("--config", config_path, "Scenario JSON")->required();
    compare->add_option("--strategy", strategies, "Strategy (repeat; at least two)");
    compare->add_option("--seed", seed_override, "Override the scenario seed");
    compare->add_option("--out", out_override, "Override the output directory");

    auto* report = app.add_subcommand("report", "Summarize a finished run directory");
    report->add_option("--dir", run_dir, "Run directory")->required();

    std::string worker_host = "127.0.0.1";
    int worker_port = 0;
    std::string worker_category = "small";
    std::string worker_node = "node-1";
    double worker_base = 0, worker_cv = -1, worker_idle = 0, worker_busy = 0;
    int worker_cores = 0;
    std::int64_t worker_seed = -1;
    auto* worker = app.add_subcommand("worker", "Serve one mock worker pod over HTTP");
    worker->add_option("--host", worker_host);
    worker->add_option("--port", worker_port);
    worker->add_option("--category", worker_category)->check(CLI::IsMember({"small", "medium"}));
    worker->add_option("--node-id", worker_node);
    worker->add_option("--base-ms", worker_base);
    worker->add_option("--cv", worker_cv);
    worker->add_option("--cores", worker_cores);
    worker->add_option("--idle-w", worker_idle);
    worker->add_option("--busy-w", worker_busy);
    worker->add_option("--seed", worker_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, strategy_override, seed_override, out_override);
        }
        if (compare->parsed()) {
            return cmd_compare(config_path, strategies, seed_override, out_override);
        }
        if (report->parsed()) {
            return cmd_report(run_dir);
        }
        if (worker->parsed()) {
            return cmd_worker(worker_host, worker_port, worker_category, worker_node, worker_base,
                              worker_cv, worker_cores, worker_idle, worker_busy, worker_seed);
        }
    } catch (const offload::core::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const offload::core::MissingArtifacts& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const offload::core::BackendUnavailable& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const offload::core::Error& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBackend;
    }
    return kExitOk;
}
