#include "phri/human/human_force.hpp"

#include <algorithm>
#include <cmath>

#include "phri/core/hash.hpp"

namespace phri::human {

namespace {
constexpr double kHoldStiffness = 300.0;  // N/m toward the grab point
constexpr double kHoldDamping = 30.0;     // Ns/m
constexpr double kGraspRamp = 0.25;       // s
constexpr double kGraspTau = 0.6;         // s
}  // namespace

Vec3 saturate(const Vec3& f, double limit) {
    const double n = f.norm();
    return n > limit ? f * (limit / n) : f;
}

SyntheticHuman::SyntheticHuman(SubjectProfile profile, env::TaskGeometry geometry, std::uint64_t trial_seed)
    : profile_(std::move(profile)), geometry_(geometry), rng_(mix_seed(trial_seed, 0x4a11ULL)) {
    profile_.validate();
    std::uniform_real_distribution<double> jitter(0.7, 1.3);
    grab_time_ = profile_.grab_delay * jitter(rng_);
}

Vec3 SyntheticHuman::ou_step(Vec3& state, double sigma, double tau, double dt) {
    const double decay = std::exp(-dt / tau);
    const double gain = sigma * std::sqrt(1.0 - decay * decay);
    const Vec3 w{normal_(rng_), normal_(rng_), normal_(rng_)};
    state = state * decay + w * gain;
    return noise_on_ ? state : Vec3{};
}

Vec3 SyntheticHuman::force(const HumanContext& ctx, double dt) {
    using env::TrialPhase;
    const auto& p = profile_;
    Vec3 f;
    switch (ctx.phase) {
        case TrialPhase::AwaitGrab:
            grab_seen_ = false;
            return {};
        case TrialPhase::Hold3s: {
            if (!grab_seen_) {
                grab_point_ = ctx.position;
                grab_seen_ = true;
            }
            const double ramp = std::clamp((ctx.t - ctx.t_grab) / kGraspRamp, 0.0, 1.0);
            const Vec3 grasp = ou_step(grasp_, p.grab_force, kGraspTau, dt);
            const Vec3 jitter = ou_step(noise_, 0.3 * p.noise_sigma, 0.05, dt);
            f = (grasp + jitter) * ramp + (grab_point_ - ctx.position) * kHoldStiffness - ctx.velocity * kHoldDamping;
            break;
        }
        case TrialPhase::Go:
        case TrialPhase::InContact:
        case TrialPhase::Done: {
            if (!reference_) reference_ = ReferenceTrajectory::plan(p, geometry_, ctx.position, rng_);
            const bool pushing = ctx.phase != TrialPhase::Go && ctx.t - ctx.t_contact >= p.contact_reaction;
            const Vec3 noise = ou_step(noise_, p.noise_sigma, p.noise_tau, dt);
            if (!pushing) {
                const RefState ref = reference_->at(ctx.t - ctx.t_go);
                f = (ref.position - ctx.position) * p.kp + (ref.velocity - ctx.velocity) * p.kd + noise;
                push_from_ = saturate(f, p.force_limit);
            } else {
                if (!push_started_) {
                    push_started_ = true;
                    push_start_ = ctx.t;
                }
                const double ramp = std::clamp((ctx.t - push_start_) / p.push_ramp, 0.0, 1.0);
                const Vec3 goal = geometry_.normal * p.push_force;
                f = push_from_ + (goal - push_from_) * ramp + noise * 0.5;
            }
            break;
        }
    }
    return saturate(f, p.force_limit);
}

}  // namespace phri::human
