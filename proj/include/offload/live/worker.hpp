#pragma once

#include <memory>
#include <string>

#include "offload/core/types.hpp"

namespace offload::live {

struct WorkerConfig {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    core::NodeSpec spec;
    std::uint64_t seed = 1;
};

/// Mock inference pod served over HTTP.
///
///   POST /infer    {"task_id", "tag_id", "replication_index"}
///                  sleeps one emulated service time, replies
///                  {"task_id", "service_ms"} with the measured sleep.
///   GET  /metrics  {"cpu_util", "power_w", "completed_rts_ms"}
///                  cpu is active_requests / cores clipped to [0, 1];
///                  completed service times drain on every poll.
class Worker {
public:
    explicit Worker(WorkerConfig config);
    ~Worker();
    Worker(const Worker&) = delete;
    Worker& operator=(const Worker&) = delete;

    /// Binds and serves on a background thread. Throws BindFailure.
    void start();
    void stop();

    int port() const;
    std::string address() const;
    /// High-water mark of concurrent /infer requests.
    int inflight_high_water() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace offload::live
