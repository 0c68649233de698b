#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "phri/control/voting.hpp"
#include "phri/est/intent.hpp"
#include "phri/est/models.hpp"

namespace phri::est {

struct PipelineSettings {
    int inference_every = 10;  // ticks between detector/estimator updates
    std::size_t vote_capacity = 100;
    double stale_after_s = 0.1;
};

/// One inference update, for the no-lookahead audit.
struct InferenceRecord {
    std::size_t tick = 0;         // tick at which the result became available
    std::size_t source_tick = 0;  // newest sample inside the inputs
    std::uint64_t detector_hash = 0;
    std::uint64_t estimator_hash = 0;
    Subtask detected = Subtask::Idle;
    double progress_raw = kNoEvent;
};

/// FNV-1a over the raw (unstandardized) window values.
std::uint64_t window_hash(const Eigen::MatrixXd& w);

/// Detector + voting buffer + progress estimator, run synchronously at the
/// control rate. Inference happens every `inference_every` ticks and the
/// latest result is held in between; the voting buffer is fed every tick.
/// The estimator's clamped output reaches the controller only while Driving
/// is voted; its raw output is reported on every tick.
class IntentPipeline final : public IntentSource {
public:
    IntentPipeline(SubtaskDetector detector, std::unique_ptr<ProgressModel> estimator, PipelineSettings s = {});

    void reset() override;
    IntentOutput step(const TickRecord& row, std::size_t tick) override;

    const std::vector<InferenceRecord>& audit() const { return audit_; }
    const TrialSignals& signals() const { return signals_; }
    std::optional<std::size_t> driving_onset() const { return onset_; }
    bool keep_audit = true;

private:
    SubtaskDetector detector_;
    std::unique_ptr<ProgressModel> estimator_;
    PipelineSettings settings_;
    TrialSignals signals_;
    control::VotingBuffer votes_;
    Subtask detected_ = Subtask::Idle;
    double raw_ = kNoEvent;
    std::optional<std::size_t> onset_;
    std::vector<InferenceRecord> audit_;
};

/// Runs an IntentPipeline on a worker thread. The control thread hands over
/// each tick without blocking and reads the most recently published output;
/// an output older than `stale_after_s` is marked stale.
class AsyncIntent final : public IntentSource {
public:
    AsyncIntent(SubtaskDetector detector, std::unique_ptr<ProgressModel> estimator, PipelineSettings s = {},
                double rate = 500.0);
    ~AsyncIntent() override;
    AsyncIntent(const AsyncIntent&) = delete;
    AsyncIntent& operator=(const AsyncIntent&) = delete;

    void reset() override;
    IntentOutput step(const TickRecord& row, std::size_t tick) override;

    /// Blocks until every submitted tick has been processed (tests, shutdown).
    void drain();
    std::size_t stale_count() const { return stale_count_; }

private:
    struct Item {
        TickRecord row;
        std::size_t tick;
        std::uint64_t generation;
    };
    void run();

    IntentPipeline pipeline_;
    PipelineSettings settings_;
    double rate_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<Item> queue_;
    bool busy_ = false;
    bool stop_ = false;
    std::uint64_t generation_ = 0;
    IntentOutput published_;
    std::optional<std::size_t> published_tick_;
    std::size_t stale_count_ = 0;
    std::thread worker_;
};

}  // namespace phri::est
