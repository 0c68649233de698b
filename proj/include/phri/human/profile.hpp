#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace phri::human {

/// Behavioral parameters of one synthetic subject.
struct SubjectProfile {
    std::string id;
    // Speed along the path is proportional to u^a (1-u)^b, u = normalized time.
    double shape_a = 2.0;
    double shape_b = 2.5;
    // Nominal Driving duration T = fitts_a + fitts_b * IoD, jittered per trial.
    double fitts_a = 0.8;
    double fitts_b = 0.45;
    double duration_jitter = 0.08;  // log-normal sigma
    double curvature = 0.02;        // lateral bow amplitude [m]
    double overshoot = 0.006;       // reference continues this far past the plane [m]
    double aim_fraction = 0.6;      // aim points are drawn inside this fraction of the target radius
    double kp = 2000.0;             // N/m
    double kd = 380.0;              // Ns/m
    double noise_sigma = 1.0;       // N
    double noise_tau = 0.2;         // s
    double grab_force = 2.0;        // N
    double grab_delay = 1.2;        // s after the grab prompt
    double contact_reaction = 0.18; // s before switching to a steady push
    double push_force = 42.0;       // N
    double push_ramp = 1.0;         // s
    double force_limit = 60.0;      // N
    std::uint64_t seed = 0;

    /// Throws ConfigError when a gain or shape parameter is not positive.
    void validate() const;
};

/// Inclusive [min, max] ranges profiles are sampled from.
struct ProfileRanges {
    std::pair<double, double> shape_a{1.6, 2.6};
    std::pair<double, double> shape_b{1.8, 3.2};
    std::pair<double, double> fitts_a{0.7, 1.0};
    std::pair<double, double> fitts_b{0.35, 0.55};
    std::pair<double, double> duration_jitter{0.05, 0.10};
    std::pair<double, double> curvature{0.008, 0.03};
    std::pair<double, double> overshoot{0.004, 0.008};
    std::pair<double, double> kp{1600.0, 2400.0};
    std::pair<double, double> kd{300.0, 450.0};
    std::pair<double, double> noise_sigma{0.4, 1.0};
    std::pair<double, double> noise_tau{0.1, 0.3};
    std::pair<double, double> grab_force{1.0, 3.0};
    std::pair<double, double> grab_delay{0.8, 1.6};
    std::pair<double, double> contact_reaction{0.12, 0.25};
    std::pair<double, double> push_force{38.0, 46.0};
    std::pair<double, double> push_ramp{0.8, 1.4};
    double aim_fraction = 0.6;
    double force_limit = 60.0;
};

/// Draws `count` profiles deterministically from `seed`.
std::vector<SubjectProfile> sample_profiles(const ProfileRanges& ranges, int count, std::uint64_t seed);

}  // namespace phri::human
