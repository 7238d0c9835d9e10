#include "offload/live/worker.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "offload/core/errors.hpp"
#include "offload/core/rng.hpp"
#include "offload/sim/simulator.hpp"

namespace offload::live {

struct Worker::Impl {
    WorkerConfig cfg;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> active{0};
    std::atomic<int> hwm{0};
    std::mutex mu;  // guards rng and completed
    core::Rng rng;
    std::vector<double> completed;

    explicit Impl(WorkerConfig c)
        : cfg(std::move(c)), rng(core::derive_seed(cfg.seed, "worker:" + cfg.spec.node_id)) {}
};

Worker::Worker(WorkerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Worker::~Worker() { stop(); }

void Worker::start() {
    Impl& w = *impl_;
    w.server.new_task_queue = [] { return new httplib::ThreadPool(32); };

    w.server.Post("/infer", [&w](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("task_id")) {
            res.status = 400;
            res.set_content(R"({"error":"malformed task"})", "application/json");
            return;
        }
        const int now_active = w.active.fetch_add(1) + 1;
        int expected = w.hwm.load();
        while (now_active > expected && !w.hwm.compare_exchange_weak(expected, now_active)) {
        }

        double delay_ms = 0;
        {
            std::lock_guard lock(w.mu);
            delay_ms = sim::draw_service_time(w.cfg.spec, w.rng);
        }
        const auto t0 = std::chrono::steady_clock::now();
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
        const double service_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        {
            std::lock_guard lock(w.mu);
            w.completed.push_back(service_ms);
        }
        w.active.fetch_sub(1);

        nlohmann::json reply{{"task_id", body["task_id"]}, {"service_ms", service_ms}};
        res.set_content(reply.dump(), "application/json");
    });

    w.server.Get("/metrics", [&w](const httplib::Request&, httplib::Response& res) {
        std::vector<double> drained;
        {
            std::lock_guard lock(w.mu);
            drained.swap(w.completed);
        }
        const double cpu =
            std::min(1.0, static_cast<double>(w.active.load()) / static_cast<double>(w.cfg.spec.cores));
        nlohmann::json reply{{"cpu_util", cpu},
                             {"power_w", sim::pod_power(w.cfg.spec, cpu)},
                             {"completed_rts_ms", drained}};
        res.set_content(reply.dump(), "application/json");
    });

    if (w.cfg.port == 0) {
        w.port = w.server.bind_to_any_port(w.cfg.host);
        if (w.port <= 0) throw core::BindFailure("cannot bind worker on " + w.cfg.host);
    } else {
        if (!w.server.bind_to_port(w.cfg.host, w.cfg.port)) {
            throw core::BindFailure("cannot bind worker on " + w.cfg.host + ":" +
                                    std::to_string(w.cfg.port));
        }
        w.port = w.cfg.port;
    }
    w.thread = std::thread([&w] { w.server.listen_after_bind(); });
    w.server.wait_until_ready();
}

void Worker::stop() {
    if (!impl_) return;
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int Worker::port() const { return impl_->port; }

std::string Worker::address() const {
    return impl_->cfg.host + ":" + std::to_string(impl_->port);
}

int Worker::inflight_high_water() const { return impl_->hwm.load(); }

}  // namespace offload::live
