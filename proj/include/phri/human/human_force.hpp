#pragma once

#include <optional>
#include <random>

#include "phri/core/vec3.hpp"
#include "phri/env/geometry.hpp"
#include "phri/env/lifecycle.hpp"
#include "phri/human/profile.hpp"
#include "phri/human/reference.hpp"

namespace phri::human {

/// Everything the synthetic human perceives at one tick.
struct HumanContext {
    env::TrialPhase phase = env::TrialPhase::AwaitGrab;
    double t = 0.0;
    double t_grab = 0.0;     // valid once grabbed
    double t_go = 0.0;       // valid from Go on
    double t_contact = 0.0;  // valid from InContact on
    Vec3 position;
    Vec3 velocity;
};

/// Saturates a force vector to the given magnitude.
Vec3 saturate(const Vec3& f, double limit);

/// Stochastic human force generator for one trial.
///
/// Idle: no force. ToolAttachment: wandering grasp force with a weak hold
/// toward the grab point. Driving: saturated PD tracking of the planned
/// reference plus Ornstein-Uhlenbeck noise. Contact: keeps tracking for a
/// short reaction time, then ramps to a steady push along the approach axis.
class SyntheticHuman {
public:
    SyntheticHuman(SubjectProfile profile, env::TaskGeometry geometry, std::uint64_t trial_seed);

    /// Delay between the grab prompt (trial start) and grabbing the handle.
    double grab_time() const { return grab_time_; }
    /// Advances the noise state by one tick and returns F_h.
    Vec3 force(const HumanContext& ctx, double dt);

    const std::optional<ReferenceTrajectory>& reference() const { return reference_; }
    const SubjectProfile& profile() const { return profile_; }

    /// Disables all random force components (noise, grasp wander).
    void set_noise_enabled(bool on) { noise_on_ = on; }

private:
    Vec3 ou_step(Vec3& state, double sigma, double tau, double dt);

    SubjectProfile profile_;
    env::TaskGeometry geometry_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double grab_time_ = 1.0;
    bool noise_on_ = true;

    Vec3 noise_;
    Vec3 grasp_;
    Vec3 grab_point_;
    bool grab_seen_ = false;
    std::optional<ReferenceTrajectory> reference_;
    bool push_started_ = false;
    double push_start_ = 0.0;
    Vec3 push_from_;
};

}  // namespace phri::human
