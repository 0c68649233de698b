#include "phri/est/features.hpp"

#include <cmath>
#include <numbers>

#include "phri/core/errors.hpp"

namespace phri::est {

void FeatureSpec::validate() const {
    if (!(rate > 0.0)) throw ConfigError("feature rate must be positive");
    detector.validate();
    estimator.validate();
    if (!(accel_cutoff_hz > 0.0)) throw ConfigError("acceleration cutoff must be positive");
}

namespace {
nlohmann::json window_json(const SlidingWindowSpec& w) {
    return {{"length_s", w.length_s}, {"downsample", w.downsample}, {"channels", w.channels}};
}
SlidingWindowSpec window_from_json(const nlohmann::json& j) {
    return {j.at("length_s").get<double>(), j.at("downsample").get<int>(),
            j.at("channels").get<std::vector<std::string>>()};
}
}  // namespace

nlohmann::json FeatureSpec::to_json() const {
    return {{"rate", rate},
            {"detector", window_json(detector)},
            {"estimator", window_json(estimator)},
            {"accel_cutoff_hz", accel_cutoff_hz}};
}

FeatureSpec FeatureSpec::from_json(const nlohmann::json& j) {
    FeatureSpec s;
    s.rate = j.at("rate").get<double>();
    s.detector = window_from_json(j.at("detector"));
    s.estimator = window_from_json(j.at("estimator"));
    s.accel_cutoff_hz = j.at("accel_cutoff_hz").get<double>();
    return s;
}

TrialSignals::TrialSignals(FeatureSpec spec)
    : spec_(std::move(spec)),
      detector_({"speed", "f_int", "f_h"}, spec_.rate),
      estimator_({"speed", "accel"}, spec_.rate) {
    spec_.validate();
}

void TrialSignals::reserve(std::size_t ticks) {
    detector_.reserve(ticks);
    estimator_.reserve(ticks);
    positions_.reserve(ticks);
    velocities_.reserve(ticks);
}

void TrialSignals::push(const TickRecord& row) {
    const double dt = 1.0 / spec_.rate;
    const std::size_t k = velocities_.size();
    velocities_.push_back(row.velocity);
    positions_.push_back(row.position);

    // Central difference centred one tick back, so no future sample is needed.
    Vec3 accel;
    if (k >= 2) accel = (velocities_[k] - velocities_[k - 2]) / (2.0 * dt);
    else if (k == 1) accel = (velocities_[1] - velocities_[0]) / dt;
    const double rc = 1.0 / (2.0 * std::numbers::pi * spec_.accel_cutoff_hz);
    const double alpha = dt / (rc + dt);
    accel_filtered_ += (accel - accel_filtered_) * alpha;

    const double speed = row.velocity.norm();
    const double det[3] = {speed, row.f_int.norm(), row.f_h.norm()};
    const double est[2] = {speed, accel_filtered_.norm()};
    detector_.push(det);
    estimator_.push(est);
}

TrialSignals build_signals(const TrialLog& log, const FeatureSpec& spec) {
    TrialSignals s(spec);
    s.reserve(log.ticks.size());
    for (const auto& r : log.ticks) s.push(r);
    return s;
}

Standardizer Standardizer::fit(const std::vector<const TimeSeries*>& series) {
    if (series.empty()) throw ConfigError("no series to standardize");
    const std::size_t nch = series.front()->channel_count();
    std::vector<double> sum(nch, 0.0), sum_sq(nch, 0.0);
    double n = 0.0;
    for (const auto* s : series) {
        if (s->channel_count() != nch) throw ConfigError("series channel layouts differ");
        for (std::size_t k = 0; k < s->size(); ++k) {
            for (std::size_t c = 0; c < nch; ++c) {
                const double v = s->at(k, c);
                sum[c] += v;
                sum_sq[c] += v * v;
            }
        }
        n += static_cast<double>(s->size());
    }
    if (n < 2) throw ConfigError("too few samples to standardize");
    Standardizer st;
    for (std::size_t c = 0; c < nch; ++c) {
        const double mean = sum[c] / n;
        const double var = std::max(0.0, sum_sq[c] / n - mean * mean);
        st.mean.push_back(mean);
        st.stddev.push_back(var > 1e-24 ? std::sqrt(var) : 1.0);
    }
    return st;
}

void Standardizer::apply(Eigen::MatrixXd& w) const {
    if (static_cast<std::size_t>(w.rows()) != mean.size()) throw ConfigError("standardizer channel count mismatch");
    for (Eigen::Index c = 0; c < w.rows(); ++c)
        w.row(c) = (w.row(c).array() - mean[static_cast<std::size_t>(c)]) / stddev[static_cast<std::size_t>(c)];
}

nlohmann::json Standardizer::to_json() const { return {{"mean", mean}, {"std", stddev}}; }

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    return {j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
}

}  // namespace phri::est
