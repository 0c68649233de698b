#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace phri {

/// Uniformly sampled multi-channel signal. Samples are stored row-major
/// (sample, channel).
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(std::vector<std::string> channels, double rate = 500.0, double start_time = 0.0);

    double rate() const { return rate_; }
    double dt() const { return 1.0 / rate_; }
    double start_time() const { return start_time_; }
    std::size_t size() const { return channels_.empty() ? 0 : data_.size() / channels_.size(); }
    bool empty() const { return data_.empty(); }
    std::size_t channel_count() const { return channels_.size(); }
    const std::vector<std::string>& channels() const { return channels_; }

    /// Index of a named channel; throws ConfigError when absent.
    std::size_t channel_index(const std::string& name) const;

    double at(std::size_t tick, std::size_t channel) const { return data_[tick * channels_.size() + channel]; }
    std::span<const double> sample(std::size_t tick) const {
        return {data_.data() + tick * channels_.size(), channels_.size()};
    }
    double time_at(std::size_t tick) const { return start_time_ + static_cast<double>(tick) / rate_; }

    /// Appends one sample; throws ConfigError on width mismatch or non-finite values.
    void push(std::span<const double> values);
    void reserve(std::size_t samples) { data_.reserve(samples * channels_.size()); }

    /// Copy of one channel as a contiguous vector.
    std::vector<double> column(std::size_t channel) const;

private:
    std::vector<std::string> channels_;
    double rate_ = 500.0;
    double start_time_ = 0.0;
    std::vector<double> data_;
};

}  // namespace phri
