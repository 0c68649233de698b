#include "phri/core/time_series.hpp"

#include <cmath>

#include "phri/core/errors.hpp"

namespace phri {

TimeSeries::TimeSeries(std::vector<std::string> channels, double rate, double start_time)
    : channels_(std::move(channels)), rate_(rate), start_time_(start_time) {
    if (!(rate_ > 0.0)) throw ConfigError("time series rate must be positive");
    if (channels_.empty()) throw ConfigError("time series needs at least one channel");
}

std::size_t TimeSeries::channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channels_.size(); ++i)
        if (channels_[i] == name) return i;
    throw ConfigError("time series has no channel '" + name + "'");
}

void TimeSeries::push(std::span<const double> values) {
    if (values.size() != channels_.size()) throw ConfigError("sample width does not match channel count");
    for (double v : values)
        if (!std::isfinite(v)) throw ConfigError("non-finite sample value");
    data_.insert(data_.end(), values.begin(), values.end());
}

std::vector<double> TimeSeries::column(std::size_t channel) const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(k, channel);
    return out;
}

}  // namespace phri
