#include "phri/est/mj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace phri::est {

double mj_shape(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double u3 = u * u * u;
    return u3 * (10.0 - 15.0 * u + 6.0 * u * u);
}

namespace {

struct Profile {
    Vec3 p_f;
    double sse = 0.0;
};

Profile solve_for(std::span<const Vec3> pos, double dt, double t_d) {
    const Vec3 x0 = pos.front();
    double ss = 0.0;
    Vec3 sd;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const double s = mj_shape(static_cast<double>(i) * dt / t_d);
        ss += s * s;
        sd += (pos[i] - x0) * s;
    }
    Profile p;
    p.p_f = ss > 0.0 ? sd / ss : Vec3{};
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const double s = mj_shape(static_cast<double>(i) * dt / t_d);
        const Vec3 r = pos[i] - x0 - p.p_f * s;
        p.sse += r.dot(r);
    }
    return p;
}

}  // namespace

std::optional<MJFit> mj_fit(std::span<const Vec3> pos, double dt, const MJFitSettings& s) {
    if (pos.size() < s.min_samples) return std::nullopt;
    const double observed = static_cast<double>(pos.size() - 1) * dt;
    const double lo = std::max(s.min_duration, s.lower_factor * observed);
    const double hi = std::max(lo * 1.0001, s.upper_factor * observed);
    const double llo = std::log(lo), lhi = std::log(hi);

    std::vector<double> grid(static_cast<std::size_t>(s.grid));
    int best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.grid; ++i) {
        grid[static_cast<std::size_t>(i)] = llo + (lhi - llo) * i / (s.grid - 1);
        const double e = solve_for(pos, dt, std::exp(grid[static_cast<std::size_t>(i)])).sse;
        if (e < best_sse) {
            best_sse = e;
            best = i;
        }
    }
    double a = grid[static_cast<std::size_t>(std::max(best - 1, 0))];
    double b = grid[static_cast<std::size_t>(std::min(best + 1, s.grid - 1))];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = solve_for(pos, dt, std::exp(c)).sse;
    double fd = solve_for(pos, dt, std::exp(d)).sse;
    for (int it = 0; it < s.refine_iterations && b - a > 1e-12; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = solve_for(pos, dt, std::exp(c)).sse;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = solve_for(pos, dt, std::exp(d)).sse;
        }
    }
    MJFit fit;
    fit.t_d = std::exp(0.5 * (a + b));
    const auto p = solve_for(pos, dt, fit.t_d);
    fit.p_f = p.p_f;
    fit.sse = p.sse;
    fit.diverged = best == 0 || best == s.grid - 1 || !std::isfinite(fit.t_d) || !fit.p_f.finite() ||
                   !(fit.p_f.norm() > 0.0);
    return fit;
}

MJEstimate MJEstimator::update(std::span<const Vec3> pos, double dt) {
    const auto fit = mj_fit(pos, dt, settings_);
    if (!fit || fit->diverged) {
        MJEstimate e = last_;
        e.flagged = true;
        return e;
    }
    fit_ = fit;
    double path = 0.0;
    for (std::size_t i = 1; i < pos.size(); ++i) path += (pos[i] - pos[i - 1]).norm();
    const double t_obs = static_cast<double>(pos.size() - 1) * dt;
    last_ = {t_obs / fit->t_d, path / fit->p_f.norm(), false};
    return last_;
}

}  // namespace phri::est
