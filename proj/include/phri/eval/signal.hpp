#pragma once

#include <array>
#include <span>
#include <vector>

namespace phri::eval {

/// One second-order section: b0 b1 b2 a0 a1 a2 (a0 == 1).
using Sos = std::array<double, 6>;

/// Digital Butterworth high-pass of even `order` as cascaded biquads
/// (bilinear transform with prewarping).
std::vector<Sos> butter_highpass(int order, double cutoff_hz, double rate_hz);

/// Steady-state filter state for a unit step input, per section (scipy's sosfilt_zi).
std::vector<std::array<double, 2>> sosfilt_zi(const std::vector<Sos>& sos);

/// Causal filtering with transposed direct form II. `zi` may be empty (zero state).
std::vector<double> sosfilt(const std::vector<Sos>& sos, std::span<const double> x,
                            std::vector<std::array<double, 2>> zi = {});

/// Zero-phase forward-backward filtering with odd extension padding and
/// steady-state initial conditions.
std::vector<double> sosfiltfilt(const std::vector<Sos>& sos, std::span<const double> x);

struct SpectrogramPeak {
    double magnitude = 0.0;  // amplitude-calibrated: 2|X| / sum(window)
    double frequency = 0.0;  // Hz
    int frames = 0;
    int window = 0;  // samples
    int nfft = 0;
};

/// Maximum magnitude over a Hann-windowed short-time Fourier transform.
/// Window length is min(x.size(), max_window); frames overlap by `overlap`;
/// each frame is zero-padded so the bin spacing is `df` (or finer).
SpectrogramPeak spectrogram_peak(std::span<const double> x, double rate_hz, int max_window, double overlap,
                                 double df);

}  // namespace phri::eval
