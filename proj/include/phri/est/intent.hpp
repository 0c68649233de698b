#pragma once

#include <cstddef>
#include <optional>

#include "phri/core/subtask.hpp"
#include "phri/core/trial_log.hpp"

namespace phri::est {

/// What the controller sees from the intent layer at one tick.
struct IntentOutput {
    Subtask voted = Subtask::Idle;
    /// Clamped progress, present only when the controller may use it.
    std::optional<double> progress;
    /// Unclamped estimator output for the log (NaN when none exists).
    double progress_raw = kNoEvent;
    bool stale = false;
};

/// Per-tick source of subtask and progress estimates for the damping scheduler.
class IntentSource {
public:
    virtual ~IntentSource() = default;
    virtual void reset() = 0;
    /// Consumes the measurements of tick `tick` (forces, velocity, position are
    /// filled; predictions and damping are not) and returns the intent snapshot.
    virtual IntentOutput step(const TickRecord& row, std::size_t tick) = 0;
};

/// Ideal detector: reports the ground-truth subtask and no progress.
class GroundTruthIntent final : public IntentSource {
public:
    void reset() override {}
    IntentOutput step(const TickRecord& row, std::size_t) override { return {row.subtask_true, {}, kNoEvent, false}; }
};

}  // namespace phri::est
