#pragma once

#include <Eigen/Core>
#include <vector>

#include <json.hpp>

#include "phri/core/time_series.hpp"
#include "phri/core/trial_log.hpp"
#include "phri/core/window.hpp"

namespace phri::est {

/// Model inputs: detector magnitudes (speed, |F_int|, |F_h|) and estimator
/// magnitudes (speed, |a|), where a is a delayed central difference of V
/// passed through a first-order low-pass.
struct FeatureSpec {
    double rate = 500.0;
    SlidingWindowSpec detector = detector_window_spec();
    SlidingWindowSpec estimator = estimator_window_spec();
    double accel_cutoff_hz = 20.0;

    void validate() const;
    bool operator==(const FeatureSpec&) const = default;
    nlohmann::json to_json() const;
    static FeatureSpec from_json(const nlohmann::json& j);
};

/// Streaming feature builder shared by offline replay and the online loop:
/// push() one tick at a time, read windows at any pushed tick.
class TrialSignals {
public:
    explicit TrialSignals(FeatureSpec spec = {});

    void push(const TickRecord& row);
    void reserve(std::size_t ticks);
    std::size_t size() const { return detector_.size(); }

    const TimeSeries& detector() const { return detector_; }
    const TimeSeries& estimator() const { return estimator_; }
    const std::vector<Vec3>& positions() const { return positions_; }
    const FeatureSpec& spec() const { return spec_; }

    Eigen::MatrixXd detector_window(std::size_t tick) const { return window(detector_, spec_.detector, tick); }
    Eigen::MatrixXd estimator_window(std::size_t tick) const { return window(estimator_, spec_.estimator, tick); }

private:
    FeatureSpec spec_;
    TimeSeries detector_;
    TimeSeries estimator_;
    std::vector<Vec3> positions_;
    std::vector<Vec3> velocities_;
    Vec3 accel_filtered_;
};

TrialSignals build_signals(const TrialLog& log, const FeatureSpec& spec = {});

/// Per-channel standardization (x - mean) / std.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    /// Statistics over every sample of the given series (all same channel layout).
    static Standardizer fit(const std::vector<const TimeSeries*>& series);
    void apply(Eigen::MatrixXd& window) const;
    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
    bool operator==(const Standardizer&) const = default;
};

}  // namespace phri::est
