#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "phri/core/subtask.hpp"
#include "phri/env/workpiece.hpp"

namespace phri::env {

enum class TrialPhase { AwaitGrab, Hold3s, Go, InContact, Done };

std::string_view to_string(TrialPhase p);
/// Operator prompt shown during a phase.
std::string_view prompt_for(TrialPhase p);
/// Ground-truth subtask for a phase.
Subtask label_ground_truth(TrialPhase p);

/// Trial state machine driven once per control tick:
/// AwaitGrab -> (grab) Hold3s -> (hold elapsed) Go -> (contact) InContact -> (depth goal) Done.
/// Releasing the handle during the hold returns to AwaitGrab.
class TrialLifecycle {
public:
    explicit TrialLifecycle(double rate = 500.0, double hold_s = 3.0, double depth_goal = 0.004);

    TrialPhase update(std::size_t tick, bool grabbed, ContactState contact, double depth);

    TrialPhase phase() const { return phase_; }
    Subtask ground_truth() const { return label_ground_truth(phase_); }
    std::size_t hold_ticks() const { return hold_ticks_; }

    std::optional<std::size_t> grab_tick;
    std::optional<std::size_t> go_tick;
    std::optional<std::size_t> contact_tick;
    std::optional<std::size_t> done_tick;

private:
    std::size_t hold_ticks_;
    double depth_goal_;
    TrialPhase phase_ = TrialPhase::AwaitGrab;
};

}  // namespace phri::env
