#include "phri/env/lifecycle.hpp"

#include <cmath>

#include "phri/core/errors.hpp"

namespace phri::env {

std::string_view to_string(TrialPhase p) {
    switch (p) {
        case TrialPhase::AwaitGrab: return "AwaitGrab";
        case TrialPhase::Hold3s: return "Hold3s";
        case TrialPhase::Go: return "Go";
        case TrialPhase::InContact: return "InContact";
        case TrialPhase::Done: return "Done";
    }
    return "?";
}

std::string_view prompt_for(TrialPhase p) {
    switch (p) {
        case TrialPhase::AwaitGrab:
        case TrialPhase::Hold3s: return "GRAB THE HANDLE";
        case TrialPhase::Go:
        case TrialPhase::InContact: return "GO";
        case TrialPhase::Done: return "RETRACT";
    }
    return "";
}

Subtask label_ground_truth(TrialPhase p) {
    switch (p) {
        case TrialPhase::AwaitGrab: return Subtask::Idle;
        case TrialPhase::Hold3s: return Subtask::ToolAttachment;
        case TrialPhase::Go: return Subtask::Driving;
        case TrialPhase::InContact:
        case TrialPhase::Done: return Subtask::Contact;
    }
    return Subtask::Idle;
}

TrialLifecycle::TrialLifecycle(double rate, double hold_s, double depth_goal)
    : hold_ticks_(static_cast<std::size_t>(std::llround(hold_s * rate))), depth_goal_(depth_goal) {
    if (!(rate > 0.0) || !(hold_s > 0.0)) throw ConfigError("lifecycle rate and hold time must be positive");
}

TrialPhase TrialLifecycle::update(std::size_t tick, bool grabbed, ContactState contact, double depth) {
    switch (phase_) {
        case TrialPhase::AwaitGrab:
            if (grabbed) {
                phase_ = TrialPhase::Hold3s;
                grab_tick = tick;
            }
            break;
        case TrialPhase::Hold3s:
            if (!grabbed) {
                phase_ = TrialPhase::AwaitGrab;
                grab_tick.reset();
            } else if (tick - *grab_tick >= hold_ticks_) {
                phase_ = TrialPhase::Go;
                go_tick = tick;
            }
            break;
        case TrialPhase::Go:
            if (contact == ContactState::Engaged) {
                phase_ = TrialPhase::InContact;
                contact_tick = tick;
            }
            break;
        case TrialPhase::InContact:
            if (depth >= depth_goal_) {
                phase_ = TrialPhase::Done;
                done_tick = tick;
            }
            break;
        case TrialPhase::Done: break;
    }
    return phase_;
}

}  // namespace phri::env
