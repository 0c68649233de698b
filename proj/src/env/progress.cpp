#include "phri/env/progress.hpp"

#include <algorithm>
#include <cmath>

#include "phri/core/errors.hpp"

namespace phri::env {

double time_progress(double t, double t_d, double t_c) {
    if (!(t_c > t_d)) throw DegenerateTrial("Driving has zero duration (t_c <= t_d)");
    return std::clamp((t - t_d) / (t_c - t_d), 0.0, 1.0);
}

std::vector<double> trajectory_progress(std::span<const double> speed, double dt) {
    std::vector<double> out(speed.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = 1; k < speed.size(); ++k) {
        acc += 0.5 * (speed[k - 1] + speed[k]) * dt;
        out[k] = acc;
    }
    if (!(acc > 0.0)) throw DegenerateTrial("Driving path length is zero");
    for (auto& v : out) v /= acc;
    out.back() = 1.0;
    return out;
}

void label_progress(TrialLog& log) {
    const auto& m = log.meta;
    const std::size_t i_d = log.tick_of(m.t_d);
    const std::size_t i_c = log.tick_of(m.t_c);
    if (i_c <= i_d || i_c >= log.ticks.size()) throw DegenerateTrial("Driving interval is empty or out of range");

    std::vector<double> speed(i_c - i_d + 1);
    for (std::size_t k = i_d; k <= i_c; ++k) speed[k - i_d] = log.ticks[k].velocity.norm();
    const auto lambda = trajectory_progress(speed, log.dt());

    for (std::size_t k = 0; k < log.ticks.size(); ++k) {
        auto& r = log.ticks[k];
        if (k < i_d) {
            r.tau_true = 0.0;
            r.lambda_true = 0.0;
        } else if (k >= i_c) {
            r.tau_true = 1.0;
            r.lambda_true = 1.0;
        } else {
            r.tau_true = static_cast<double>(k - i_d) / static_cast<double>(i_c - i_d);
            r.lambda_true = lambda[k - i_d];
        }
    }
}

}  // namespace phri::env
