#include "phri/core/window.hpp"

#include <cmath>

#include "phri/core/errors.hpp"

namespace phri {

void SlidingWindowSpec::validate() const {
    if (!(length_s > 0.0) || !std::isfinite(length_s)) throw ConfigError("window length must be positive");
    if (downsample <= 0) throw ConfigError("window downsample stride must be positive");
    if (channels.empty()) throw ConfigError("window needs at least one channel");
}

long SlidingWindowSpec::raw_samples(double rate) const { return std::lround(length_s * rate); }

int SlidingWindowSpec::timesteps(double rate) const {
    const long raw = raw_samples(rate);
    return static_cast<int>((raw + downsample - 1) / downsample);
}

SlidingWindowSpec detector_window_spec() { return {0.5, 4, {"speed", "f_int", "f_h"}}; }

SlidingWindowSpec estimator_window_spec() { return {8.0, 32, {"speed", "accel"}}; }

Eigen::MatrixXd window(const TimeSeries& series, const SlidingWindowSpec& spec, std::size_t end_tick) {
    spec.validate();
    if (end_tick >= series.size()) throw ConfigError("window end tick beyond series");
    const int steps = spec.timesteps(series.rate());
    const auto nch = spec.channels.size();
    std::vector<std::size_t> idx(nch);
    for (std::size_t c = 0; c < nch; ++c) idx[c] = series.channel_index(spec.channels[c]);

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nch), steps);
    for (int j = 0; j < steps; ++j) {
        const long tick = static_cast<long>(end_tick) - static_cast<long>(j) * spec.downsample;
        if (tick < 0) break;
        const int col = steps - 1 - j;
        for (std::size_t c = 0; c < nch; ++c)
            out(static_cast<Eigen::Index>(c), col) = series.at(static_cast<std::size_t>(tick), idx[c]);
    }
    return out;
}

}  // namespace phri
