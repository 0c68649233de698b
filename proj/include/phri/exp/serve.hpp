#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "phri/est/models.hpp"
#include "phri/exp/config.hpp"

namespace phri::exp {

/// Counters of a live session host.
struct ServeStats {
    std::uint64_t ticks = 0;
    std::uint64_t overruns = 0;          // ticks finished after their deadline
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_dropped = 0;    // state frames evicted before sending
    std::uint64_t inputs_received = 0;
    std::uint64_t inputs_discarded = 0;  // out-of-order by client timestamp
    std::uint64_t trials_completed = 0;
    std::uint64_t trials_aborted = 0;
    bool degraded = false;
};

/// Live session host: a 500 Hz wall-clock simulation driven by an operator over
/// a WebSocket text protocol.
///
/// Client -> server: {"type":"input","pointer":[y,z],"grab":bool} with optional
/// "ts" (monotone client time; older frames are dropped) and "depth" (pointer
/// position along the approach axis in metres; without it the pointer advances
/// at serve.push_rate while grabbed after GO), and {"type":"ready"} to start
/// the next trial after one has ended.
/// Server -> client: {"type":"state", t, tool, v, b, subtask_pred, subtask_true,
/// progress_pred, depth_mm, phase, prompt, ...} at serve.frame_hz and
/// {"type":"trial_end","report":{...}} when a trial completes or is aborted.
///
/// The operator's pointer pulls the tool through a virtual spring-damper. One
/// client at a time; a disconnect during a trial aborts it and the partial log
/// is saved with the "aborted" flag. Completed and aborted logs go to
/// <out_dir>/trial_<n>.csv.
class TelemetryServer {
public:
    TelemetryServer(ExperimentConfig cfg, const est::SubtaskDetector& detector, const est::ProgressModel& estimator,
                    std::filesystem::path out_dir);
    ~TelemetryServer();
    TelemetryServer(const TelemetryServer&) = delete;
    TelemetryServer& operator=(const TelemetryServer&) = delete;

    /// Binds (port 0 picks a free port) and starts the network and simulation threads.
    void start();
    /// Ends the running trial as aborted and joins all threads.
    void stop();
    unsigned short port() const;
    ServeStats stats() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace phri::exp
