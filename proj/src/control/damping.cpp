#include "phri/control/damping.hpp"

#include <algorithm>
#include <cmath>

#include "phri/core/errors.hpp"

namespace phri::control {

void DampingSchedule::validate() const {
    if (!(0.0 < b_low && b_low < b_med && b_med < b_high))
        throw ConfigError("damping levels must satisfy 0 < b_low < b_med < b_high");
    if (!(blend_s > 0.0)) throw ConfigError("blend duration must be positive");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("adaptation threshold must lie in (0, 1]");
}

double DampingSchedule::target_for(Subtask s) const {
    switch (s) {
        case Subtask::Idle:
        case Subtask::ToolAttachment: return b_med;
        case Subtask::Driving: return b_low;
        case Subtask::Contact: return b_high;
    }
    return b_med;
}

double blend_damping(double b_from, double b_to, double t_since_start, double t_w) {
    const double s = std::clamp(t_since_start / t_w, 0.0, 1.0);
    return b_from + (b_to - b_from) * (s * s * (3.0 - 2.0 * s));
}

double blend_damping_rate(double b_from, double b_to, double t_since_start, double t_w) {
    const double s = std::clamp(t_since_start / t_w, 0.0, 1.0);
    return (b_to - b_from) * 6.0 * s * (1.0 - s) / t_w;
}

DampingScheduler::DampingScheduler(ControllerId mode, DampingSchedule schedule)
    : mode_(mode), schedule_(schedule) {
    schedule_.validate();
    const double b0 = mode_ == ControllerId::C1 ? schedule_.b_high : schedule_.target_for(Subtask::Idle);
    from_ = to_ = current_ = b0;
}

double DampingScheduler::value_at(double t) const {
    return blend_damping(from_, to_, t - blend_start_, schedule_.blend_s);
}

void DampingScheduler::start_blend(double target, double t) {
    from_ = value_at(t);
    to_ = target;
    blend_start_ = t;
}

double DampingScheduler::step(Subtask voted, std::optional<double> progress, double t) {
    last_t_ = t;
    if (mode_ == ControllerId::C1) {
        last_voted_ = voted;
        return current_;
    }
    if (!latched_) {
        if (voted != last_voted_) start_blend(schedule_.target_for(voted), t);
        if (mode_ == ControllerId::C3 && voted == Subtask::Driving && progress &&
            std::clamp(*progress, 0.0, 1.0) >= schedule_.threshold) {
            start_blend(schedule_.b_high, t);
            latched_ = true;
            t_a_ = t;
        }
    }
    last_voted_ = voted;
    current_ = value_at(t);
    return current_;
}

ScheduleSnapshot DampingScheduler::snapshot() const {
    const bool blending = mode_ != ControllerId::C1 && last_t_ - blend_start_ < schedule_.blend_s && from_ != to_;
    return {current_, last_voted_, blending ? BlendPhase::Blending : BlendPhase::Holding, latched_};
}

}  // namespace phri::control
