#pragma once

#include <optional>

#include "phri/core/subtask.hpp"
#include "phri/core/trial_log.hpp"

namespace phri::control {

/// Damping levels, blend duration and the pre-contact adaptation threshold.
struct DampingSchedule {
    double b_low = 100.0;   // Driving
    double b_med = 300.0;   // Idle, ToolAttachment
    double b_high = 500.0;  // Contact
    double blend_s = 0.2;
    double threshold = 0.75;

    void validate() const;
    double target_for(Subtask s) const;
};

/// Smoothstep blend b_from -> b_to over t_w seconds (zero slope at both ends).
double blend_damping(double b_from, double b_to, double t_since_start, double t_w);
/// d b / d t of the blend above.
double blend_damping_rate(double b_from, double b_to, double t_since_start, double t_w);

enum class BlendPhase { Holding, Blending };

struct ScheduleSnapshot {
    double damping = 0.0;
    Subtask voted = Subtask::Idle;
    BlendPhase phase = BlendPhase::Holding;
    bool early_adapted = false;
};

/// Online damping scheduler for the three controllers.
///
/// C1 holds b_high. C2 blends toward the damping of the voted subtask whenever
/// the vote changes; a blend that is interrupted restarts from the current
/// value. C3 additionally starts a one-shot blend to b_high the first time the
/// clamped progress estimate reaches the threshold while Driving is voted, and
/// keeps b_high for the rest of the trial.
class DampingScheduler {
public:
    DampingScheduler(ControllerId mode, DampingSchedule schedule);

    /// Advances to time `t` (non-decreasing across calls) and returns the damping to apply.
    double step(Subtask voted, std::optional<double> progress, double t);

    double current() const { return current_; }
    /// Time of the pre-contact adaptation (C3 only).
    std::optional<double> adaptation_time() const { return t_a_; }
    ScheduleSnapshot snapshot() const;
    ControllerId mode() const { return mode_; }
    const DampingSchedule& schedule() const { return schedule_; }

private:
    void start_blend(double target, double t);
    double value_at(double t) const;

    ControllerId mode_;
    DampingSchedule schedule_;
    Subtask last_voted_ = Subtask::Idle;
    double from_ = 0.0;
    double to_ = 0.0;
    double blend_start_ = 0.0;
    double current_ = 0.0;
    double last_t_ = 0.0;
    bool latched_ = false;
    std::optional<double> t_a_;
};

}  // namespace phri::control
