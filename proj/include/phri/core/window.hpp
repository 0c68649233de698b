#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "phri/core/time_series.hpp"

namespace phri {

/// Shape of a sliding window over a TimeSeries.
///
/// The window covers the last `length_s` seconds ending at the current tick and
/// keeps every `downsample`-th raw sample, always including the current one.
struct SlidingWindowSpec {
    double length_s = 0.5;
    int downsample = 4;
    std::vector<std::string> channels;

    /// Throws ConfigError for non-positive length/stride or an empty channel list.
    void validate() const;
    /// Raw samples spanned by the window at `rate`.
    long raw_samples(double rate) const;
    /// Number of timesteps after subsampling: ceil(raw_samples / downsample).
    int timesteps(double rate) const;

    bool operator==(const SlidingWindowSpec&) const = default;
};

SlidingWindowSpec detector_window_spec();
SlidingWindowSpec estimator_window_spec();

/// Extracts the window ending at `end_tick` as a (channels x timesteps) matrix,
/// oldest sample in column 0. Samples before the start of the series are zero.
Eigen::MatrixXd window(const TimeSeries& series, const SlidingWindowSpec& spec, std::size_t end_tick);

}  // namespace phri
