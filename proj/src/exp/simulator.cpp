#include "phri/exp/simulator.hpp"

#include <cmath>

#include "phri/control/admittance.hpp"
#include "phri/core/errors.hpp"
#include "phri/core/hash.hpp"
#include "phri/core/numfmt.hpp"
#include "phri/env/progress.hpp"

namespace phri::exp {

std::uint64_t attempt_seed(std::uint64_t trial_seed, int attempt) {
    return attempt == 0 ? trial_seed : mix_seed(trial_seed, static_cast<std::uint64_t>(attempt));
}

TrialStepper::TrialStepper(const env::TaskGeometry& geometry, const SimSettings& settings, ControllerId controller,
                           est::IntentSource& intent)
    : s_(settings),
      dt_(1.0 / settings.rate),
      workpiece_(geometry, settings.stiffness),
      lifecycle_(settings.rate, settings.hold_s, settings.depth_goal),
      scheduler_(controller, settings.schedule),
      intent_(intent),
      x_(geometry.home) {
    intent_.reset();
    log_.ticks.reserve(8 * static_cast<std::size_t>(settings.rate));
}

bool TrialStepper::step(bool grabbed, const ForceFn& human_force) {
    if (finished_) return false;
    const double t = static_cast<double>(k_) * dt_;
    const auto contact = workpiece_.update(x_);
    const auto phase = lifecycle_.update(k_, grabbed, contact, workpiece_.depth(x_));
    const auto limit = [&](double s) { return static_cast<std::size_t>(std::llround(s * s_.rate)); };
    if (contact == env::ContactState::Missed) failure_ = "miss";
    else if (!lifecycle_.go_tick && s_.max_wait_s > 0 && k_ > limit(s_.max_wait_s)) failure_ = "timeout";
    else if (lifecycle_.go_tick && !lifecycle_.contact_tick && k_ - *lifecycle_.go_tick > limit(s_.max_driving_s))
        failure_ = "timeout";
    else if (lifecycle_.contact_tick && k_ - *lifecycle_.contact_tick > limit(s_.max_contact_s))
        failure_ = "timeout";
    if (!failure_.empty()) {
        finished_ = true;
        return false;
    }

    human::HumanContext ctx;
    ctx.phase = phase;
    ctx.t = t;
    if (lifecycle_.grab_tick) ctx.t_grab = static_cast<double>(*lifecycle_.grab_tick) * dt_;
    if (lifecycle_.go_tick) ctx.t_go = static_cast<double>(*lifecycle_.go_tick) * dt_;
    if (lifecycle_.contact_tick) ctx.t_contact = static_cast<double>(*lifecycle_.contact_tick) * dt_;
    ctx.position = x_;
    ctx.velocity = v_;

    TickRecord row;
    row.t = t;
    row.position = x_;
    row.velocity = v_;
    row.f_env = workpiece_.force(x_);
    row.f_h = human_force(ctx);
    row.f_int = row.f_h + row.f_env;
    row.subtask_true = lifecycle_.ground_truth();

    last_intent_ = intent_.step(row, k_);
    if (last_intent_.stale) ++stale_;
    const double b = scheduler_.step(last_intent_.voted, last_intent_.progress, t);
    row.damping = b;
    row.subtask_pred = last_intent_.voted;
    row.progress_pred = last_intent_.progress_raw;
    log_.ticks.push_back(row);
    ++k_;
    if (phase == env::TrialPhase::Done) {
        finished_ = true;
        return false;
    }
    v_ = control::step_admittance(v_, row.f_int, {s_.mass, b, dt_});
    x_ += v_ * dt_;
    return true;
}

TrialLog TrialStepper::finish(TrialMeta meta, const std::string& failure) {
    finished_ = true;
    if (failure_.empty()) failure_ = failure;
    TrialLog log;
    log.meta = std::move(meta);
    log.ticks = std::move(log_.ticks);
    log_.ticks.clear();
    auto& m = log.meta;
    m.controller = scheduler_.mode();
    m.rate = s_.rate;
    const auto tick_time = [&](const std::optional<std::size_t>& k) {
        return k ? static_cast<double>(*k) * dt_ : kNoEvent;
    };
    m.t_grab = tick_time(lifecycle_.grab_tick);
    m.t_d = tick_time(lifecycle_.go_tick);
    m.t_c = tick_time(lifecycle_.contact_tick);
    m.t_f = tick_time(lifecycle_.done_tick);
    if (auto ta = scheduler_.adaptation_time()) m.t_a = *ta;
    const double stale_fraction =
        log.ticks.empty() ? 0.0 : static_cast<double>(stale_) / static_cast<double>(log.ticks.size());
    m.extra["stale_fraction"] = format_double(stale_fraction);
    if (stale_fraction > s_.stale_flag_fraction) m.add_flag("stale");
    if (failure_.empty() && !lifecycle_.done_tick) failure_ = "incomplete";
    m.valid = failure_.empty();
    if (!failure_.empty()) m.add_flag(failure_);
    if (m.valid) {
        try {
            env::label_progress(log);
        } catch (const DegenerateTrial&) {
            m.valid = false;
            m.add_flag("degenerate");
        }
    }
    return log;
}

TrialLog simulate_trial(const TrialSpec& spec, const SimSettings& s, est::IntentSource& intent) {
    const double dt = 1.0 / s.rate;
    const auto geo = env::TaskGeometry::make(spec.lp, spec.corner, spec.iod, {}, s.depth_goal);
    human::SyntheticHuman human(spec.profile, geo, spec.seed);
    TrialStepper stepper(geo, s, spec.controller, intent);
    const auto force = [&](const human::HumanContext& ctx) { return human.force(ctx, dt); };
    while (stepper.step(stepper.time() >= human.grab_time(), force)) {
    }
    TrialMeta m;
    m.subject = spec.profile.id;
    m.lp = spec.lp;
    m.corner = spec.corner;
    m.iod = spec.iod;
    m.repetition = spec.repetition;
    m.seed = spec.seed;
    return stepper.finish(std::move(m));
}

}  // namespace phri::exp
