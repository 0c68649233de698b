#include "phri/human/profile.hpp"

#include <random>

#include "phri/core/errors.hpp"
#include "phri/core/hash.hpp"

namespace phri::human {

void SubjectProfile::validate() const {
    const double positive[] = {shape_a, shape_b, fitts_a, fitts_b, kp, kd, noise_tau, grab_force,
                               grab_delay, contact_reaction, push_force, push_ramp, force_limit, aim_fraction};
    for (double v : positive)
        if (!(v > 0.0)) throw ConfigError("subject profile '" + id + "' has a non-positive gain or shape parameter");
    if (noise_sigma < 0.0 || curvature < 0.0 || overshoot < 0.0 || duration_jitter < 0.0)
        throw ConfigError("subject profile '" + id + "' has a negative noise or geometry parameter");
    if (aim_fraction > 1.0) throw ConfigError("aim fraction must not exceed 1");
}

std::vector<SubjectProfile> sample_profiles(const ProfileRanges& r, int count, std::uint64_t seed) {
    if (count <= 0) throw ConfigError("profile count must be positive");
    std::mt19937_64 rng(mix_seed(seed, 0x5ULL));
    auto draw = [&](const std::pair<double, double>& range) {
        return std::uniform_real_distribution<double>(range.first, range.second)(rng);
    };
    std::vector<SubjectProfile> out;
    for (int i = 0; i < count; ++i) {
        SubjectProfile p;
        p.id = "S" + std::to_string(i + 1);
        p.shape_a = draw(r.shape_a);
        p.shape_b = draw(r.shape_b);
        p.fitts_a = draw(r.fitts_a);
        p.fitts_b = draw(r.fitts_b);
        p.duration_jitter = draw(r.duration_jitter);
        p.curvature = draw(r.curvature);
        p.overshoot = draw(r.overshoot);
        p.kp = draw(r.kp);
        p.kd = draw(r.kd);
        p.noise_sigma = draw(r.noise_sigma);
        p.noise_tau = draw(r.noise_tau);
        p.grab_force = draw(r.grab_force);
        p.grab_delay = draw(r.grab_delay);
        p.contact_reaction = draw(r.contact_reaction);
        p.push_force = draw(r.push_force);
        p.push_ramp = draw(r.push_ramp);
        p.aim_fraction = r.aim_fraction;
        p.force_limit = r.force_limit;
        p.seed = mix_seed(seed, static_cast<std::uint64_t>(i + 1));
        p.validate();
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace phri::human
