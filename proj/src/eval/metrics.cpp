#include "phri/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "phri/core/errors.hpp"
#include "phri/eval/signal.hpp"

namespace phri::eval {

namespace {

/// Accuracy, weighted F1, concurrency and fluctuation from the counts.
void score(DetectionReport& r) {
    const long n = r.ticks;
    if (n == 0) return;
    long correct = 0;
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < kSubtaskCount; ++c) {
        correct += r.confusion[c][c];
        long support = 0, predicted = 0;
        for (std::size_t j = 0; j < kSubtaskCount; ++j) {
            support += r.confusion[c][j];
            predicted += r.confusion[j][c];
        }
        if (support == 0) continue;
        const double tp = static_cast<double>(r.confusion[c][c]);
        const double denom = static_cast<double>(support + predicted);
        f1_sum += static_cast<double>(support) * (denom > 0 ? 2.0 * tp / denom : 0.0);
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    r.weighted_f1 = f1_sum / static_cast<double>(n);
    r.concurrency = r.transition_ticks > 0
                        ? static_cast<double>(r.transition_correct) / static_cast<double>(r.transition_ticks)
                        : 1.0;
    r.fluctuation = r.steady_ticks > 0 && r.rate > 0
                        ? static_cast<double>(r.changes) / (static_cast<double>(r.steady_ticks) / r.rate)
                        : 0.0;
}

}  // namespace

DetectionReport detection_metrics(std::span<const Subtask> truth, std::span<const Subtask> pred, double rate,
                                  double w) {
    if (truth.size() != pred.size()) throw FormatError("label sequences differ in length");
    DetectionReport r;
    const auto n = static_cast<long>(truth.size());
    r.ticks = n;
    if (n == 0) return r;

    for (long k = 0; k < n; ++k) {
        const auto t = static_cast<std::size_t>(index_of(truth[static_cast<std::size_t>(k)]));
        const auto p = static_cast<std::size_t>(index_of(pred[static_cast<std::size_t>(k)]));
        ++r.confusion[t][p];
    }
    r.rate = rate;

    const long half = std::lround(w * rate);
    std::vector<char> near(static_cast<std::size_t>(n), 0);
    for (long k = 1; k < n; ++k) {
        if (truth[static_cast<std::size_t>(k)] == truth[static_cast<std::size_t>(k - 1)]) continue;
        for (long j = std::max(0L, k - half); j <= std::min(n - 1, k + half); ++j) near[static_cast<std::size_t>(j)] = 1;
    }
    long in_count = 0, in_correct = 0, out_count = 0, changes = 0;
    for (long k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (near[i]) {
            ++in_count;
            if (truth[i] == pred[i]) ++in_correct;
        } else {
            ++out_count;
            if (k > 0 && !near[i - 1] && pred[i] != pred[i - 1]) ++changes;
        }
    }
    r.transition_ticks = in_count;
    r.transition_correct = in_correct;
    r.steady_ticks = out_count;
    r.changes = changes;
    score(r);
    return r;
}

DetectionReport pool_detection(const std::vector<DetectionReport>& reports) {
    DetectionReport p;
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < kSubtaskCount; ++i)
            for (std::size_t j = 0; j < kSubtaskCount; ++j) p.confusion[i][j] += r.confusion[i][j];
        p.ticks += r.ticks;
        p.transition_ticks += r.transition_ticks;
        p.transition_correct += r.transition_correct;
        p.steady_ticks += r.steady_ticks;
        p.changes += r.changes;
        p.rate = r.rate;
    }
    score(p);
    return p;
}

namespace {
double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }
}  // namespace

RegressionReport regression_metrics(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) throw FormatError("progress sequences differ in length");
    RegressionReport r;
    const auto n = truth.size();
    r.samples = static_cast<long>(n);
    if (n == 0) return r;
    PooledRegression pooled;
    for (std::size_t k = 0; k < n; ++k) pooled.add(truth[k], finite_or_zero(pred[k]));
    r.rmse = pooled.rmse();
    r.r2 = pooled.r2();

    r.theta_max = 0.0;
    for (double p : pred) r.theta_max = std::max(r.theta_max, std::clamp(finite_or_zero(p), 0.0, 1.0));
    for (std::size_t k = 0; k < n; ++k) {
        if (std::clamp(finite_or_zero(pred[k]), 0.0, 1.0) >= r.theta_max) {
            r.mistiming = truth[k] - r.theta_max;
            break;
        }
    }
    return r;
}

void PooledRegression::add(double truth, double pred) {
    const double e = truth - pred;
    sse += e * e;
    sum += truth;
    sum_sq += truth * truth;
    ++n;
}

double PooledRegression::rmse() const { return n > 0 ? std::sqrt(sse / static_cast<double>(n)) : 0.0; }

double PooledRegression::r2() const {
    if (n == 0) return 0.0;
    const double mean = sum / static_cast<double>(n);
    const double sst = sum_sq - static_cast<double>(n) * mean * mean;
    if (!(sst > 0.0)) return sse == 0.0 ? 1.0 : 0.0;
    return 1.0 - sse / sst;
}

double oscillation_peak(std::span<const double> speed, double rate, const OscillationSettings& s,
                        bool* single_frame, double* peak_hz) {
    if (speed.empty()) {
        if (single_frame) *single_frame = true;
        return 0.0;
    }
    const auto sos = butter_highpass(s.order, s.cutoff_hz, rate);
    const auto detrended = sosfiltfilt(sos, speed);
    const int window = static_cast<int>(std::lround(s.window_s * rate));
    const auto peak = spectrogram_peak(detrended, rate, window, s.overlap, s.df);
    if (single_frame) *single_frame = static_cast<int>(speed.size()) < window;
    if (peak_hz) *peak_hz = peak.frequency;
    return peak.magnitude;
}

TaskReport task_metrics(const TrialLog& log, const OscillationSettings& s) {
    const auto& m = log.meta;
    if (!m.valid) throw DegenerateTrial("task metrics need a valid trial");
    const std::size_t i_d = log.tick_of(m.t_d);
    const std::size_t i_c = log.tick_of(m.t_c);
    const std::size_t i_f = std::min(log.tick_of(m.t_f), log.ticks.size() - 1);
    if (i_c <= i_d || i_c >= log.ticks.size()) throw DegenerateTrial("Driving interval is empty or out of range");
    const double dt = log.dt();

    TaskReport r;
    double fh = 0.0, v = 0.0, e = 0.0;
    for (std::size_t k = i_d; k < i_c; ++k) {
        const auto& a = log.ticks[k];
        const auto& b = log.ticks[k + 1];
        fh += 0.5 * (a.f_h.norm() + b.f_h.norm()) * dt;
        v += 0.5 * (a.velocity.norm() + b.velocity.norm()) * dt;
        e += 0.5 * (a.f_h.norm() * a.velocity.norm() + b.f_h.norm() * b.velocity.norm()) * dt;
    }
    r.driving_s = static_cast<double>(i_c - i_d) * dt;
    r.f_h_ave = fh / r.driving_s;
    r.v_ave = v / r.driving_s;
    r.effort = e;

    std::vector<double> speed;
    for (std::size_t k = i_c; k <= i_f; ++k) speed.push_back(log.ticks[k].velocity.norm());
    r.contact_s = static_cast<double>(i_f - i_c) * dt;
    r.oscillation = oscillation_peak(speed, m.rate, s, &r.single_frame, &r.oscillation_hz);
    return r;
}

DrivingSeries driving_series(const TrialLog& log, bool use_lambda) {
    DrivingSeries d;
    const std::size_t i_d = log.tick_of(log.meta.t_d);
    const std::size_t i_c = std::min(log.tick_of(log.meta.t_c), log.ticks.size() - 1);
    for (std::size_t k = i_d; k <= i_c; ++k) {
        const auto& r = log.ticks[k];
        d.truth.push_back(use_lambda ? r.lambda_true : r.tau_true);
        d.pred.push_back(r.progress_pred);
    }
    return d;
}

}  // namespace phri::eval
