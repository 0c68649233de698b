#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "phri/control/damping.hpp"
#include "phri/core/trial_log.hpp"
#include "phri/env/geometry.hpp"
#include "phri/env/lifecycle.hpp"
#include "phri/env/workpiece.hpp"
#include "phri/est/intent.hpp"
#include "phri/human/human_force.hpp"
#include "phri/human/profile.hpp"

namespace phri::exp {

/// One trial condition.
struct TrialSpec {
    human::SubjectProfile profile;
    double lp = 0.16;
    int corner = 0;
    double iod = 3.0;
    ControllerId controller = ControllerId::C2;
    int repetition = 0;
    std::uint64_t seed = 0;
};

struct SimSettings {
    double rate = 500.0;
    double mass = 50.0;
    double stiffness = 8000.0;
    double hold_s = 3.0;
    double depth_goal = 0.004;
    control::DampingSchedule schedule;
    double max_wait_s = 10.0;     // AwaitGrab + hold; <= 0 waits forever
    double max_driving_s = 20.0;
    double max_contact_s = 10.0;
    double stale_flag_fraction = 0.5;  // stale-output fraction above which a trial is flagged
};

/// Tick-by-tick trial dynamics shared by batch simulation and the live server.
/// Each step: contact registration and lifecycle update, failure checks,
/// forces, intent and damping, logging, then one admittance integration step.
class TrialStepper {
public:
    using ForceFn = std::function<Vec3(const human::HumanContext&)>;

    TrialStepper(const env::TaskGeometry& geometry, const SimSettings& settings, ControllerId controller,
                 est::IntentSource& intent);

    /// Runs one tick; returns false when the trial has ended (nothing more to step).
    bool step(bool grabbed, const ForceFn& human_force);

    bool finished() const { return finished_; }
    const std::string& failure() const { return failure_; }
    env::TrialPhase phase() const { return lifecycle_.phase(); }
    std::size_t ticks() const { return log_.ticks.size(); }
    double time() const { return static_cast<double>(k_) * dt_; }
    const Vec3& position() const { return x_; }
    const Vec3& velocity() const { return v_; }
    double depth() const { return workpiece_.depth(x_); }
    const TrialLog& log() const { return log_; }
    const est::IntentOutput& last_intent() const { return last_intent_; }
    const env::TaskGeometry& geometry() const { return workpiece_.geometry(); }

    /// Ends the trial (optionally with a failure reason such as "aborted"),
    /// fills event times, validity and ground-truth progress, and returns the log.
    TrialLog finish(TrialMeta meta, const std::string& failure = {});

private:
    SimSettings s_;
    double dt_;
    env::SpringWorkpiece workpiece_;
    env::TrialLifecycle lifecycle_;
    control::DampingScheduler scheduler_;
    est::IntentSource& intent_;
    Vec3 x_;
    Vec3 v_;
    std::size_t k_ = 0;
    std::size_t stale_ = 0;
    bool finished_ = false;
    std::string failure_;
    est::IntentOutput last_intent_;
    TrialLog log_;
};

/// Runs one trial in virtual time. The log always ends at the last simulated
/// tick; on failure the trial is marked invalid and `meta.flags` names the
/// reason (miss, timeout, degenerate). Trials with too many stale intent
/// outputs keep their validity but carry the "stale" flag.
TrialLog simulate_trial(const TrialSpec& spec, const SimSettings& settings, est::IntentSource& intent);

/// Trial-level seed for attempt `attempt` of a condition.
std::uint64_t attempt_seed(std::uint64_t trial_seed, int attempt);

}  // namespace phri::exp
