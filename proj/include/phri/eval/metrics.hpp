#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "phri/core/subtask.hpp"
#include "phri/core/trial_log.hpp"

namespace phri::eval {

using Confusion = std::array<std::array<long, kSubtaskCount>, kSubtaskCount>;  // [true][pred]

struct DetectionReport {
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    double concurrency = 0.0;  // accuracy within +-w of true transitions
    double fluctuation = 0.0;  // prediction changes per second outside those windows [Hz]
    Confusion confusion{};
    long ticks = 0;
    long transition_ticks = 0;
    long transition_correct = 0;
    long steady_ticks = 0;
    long changes = 0;
    double rate = 0.0;
};

/// Detection metrics over aligned per-tick label sequences sampled at `rate`.
DetectionReport detection_metrics(std::span<const Subtask> truth, std::span<const Subtask> pred, double rate,
                                  double w = 0.5);

/// Pools per-trial reports by summing their counts (all reports share one rate).
DetectionReport pool_detection(const std::vector<DetectionReport>& reports);

struct RegressionReport {
    double rmse = 0.0;
    double r2 = 0.0;
    double theta_max = 0.0;
    double mistiming = 0.0;  // positive = the threshold is reached late
    long samples = 0;
};

/// Regression metrics over the Driving samples of one trial. Predictions are
/// clamped to [0, 1] for the threshold metrics only; non-finite predictions
/// count as 0.
RegressionReport regression_metrics(std::span<const double> truth, std::span<const double> pred);

/// Pooled RMSE / R^2 over many trials (threshold metrics are not meaningful pooled).
struct PooledRegression {
    double sse = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
    long n = 0;
    void add(double truth, double pred);
    double rmse() const;
    double r2() const;
};

struct TaskReport {
    double f_h_ave = 0.0;      // N
    double v_ave = 0.0;        // m/s
    double effort = 0.0;       // J
    double oscillation = 0.0;  // spectrogram peak of detrended speed during Contact
    double oscillation_hz = 0.0;
    double driving_s = 0.0;
    double contact_s = 0.0;
    bool single_frame = false;  // Contact shorter than the spectrogram window
};

struct OscillationSettings {
    int order = 4;
    double cutoff_hz = 0.5;
    double window_s = 4.0;
    double overlap = 0.75;
    double df = 0.05;
};

/// Oscillation peak of a speed trace: zero-phase Butterworth high-pass, then
/// the maximum Hann spectrogram magnitude.
double oscillation_peak(std::span<const double> speed, double rate, const OscillationSettings& s = {},
                        bool* single_frame = nullptr, double* peak_hz = nullptr);

/// Task-performance metrics of a valid trial over [t_d, t_c] and [t_c, t_f].
TaskReport task_metrics(const TrialLog& log, const OscillationSettings& s = {});

/// Driving samples (ticks t_d..t_c inclusive) of a trial: truth and logged prediction.
struct DrivingSeries {
    std::vector<double> truth;
    std::vector<double> pred;
};
DrivingSeries driving_series(const TrialLog& log, bool use_lambda);

}  // namespace phri::eval
