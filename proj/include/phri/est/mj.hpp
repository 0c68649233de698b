#pragma once

#include <optional>
#include <span>

#include "phri/core/vec3.hpp"

namespace phri::est {

/// Normalized minimum-jerk position profile 10u^3 - 15u^4 + 6u^5, held at 1 for u >= 1.
double mj_shape(double u);

struct MJFit {
    Vec3 p_f;           // final displacement from the first observed sample [m]
    double t_d = 0.0;   // Driving duration [s]
    double sse = 0.0;
    bool diverged = false;
};

struct MJFitSettings {
    int grid = 120;                // log-spaced duration candidates
    double lower_factor = 0.25;    // search T in [lower, upper] * observed duration
    double upper_factor = 40.0;
    double min_duration = 0.05;    // s
    int refine_iterations = 80;
    std::size_t min_samples = 10;
};

/// Least-squares fit of x(t) = x0 + p_f * s(t / T) to positions sampled every
/// `dt` from the Driving onset. p_f is solved in closed form for each T, and T
/// by a log-grid scan followed by golden-section refinement.
/// Returns nullopt with fewer than `min_samples` samples.
std::optional<MJFit> mj_fit(std::span<const Vec3> positions, double dt, const MJFitSettings& s = {});

struct MJEstimate {
    double tau = 0.0;     // raw t' / T
    double lambda = 0.0;  // raw path so far / |p_f|
    bool flagged = false;
};

/// Online minimum-jerk progress: refits on every call and falls back to the last
/// valid estimate when the fit diverges.
class MJEstimator {
public:
    explicit MJEstimator(MJFitSettings s = {}) : settings_(s) {}
    void reset() { last_ = {}; }
    MJEstimate update(std::span<const Vec3> positions, double dt);
    const std::optional<MJFit>& last_fit() const { return fit_; }

private:
    MJFitSettings settings_;
    MJEstimate last_;
    std::optional<MJFit> fit_;
};

}  // namespace phri::est
