#include "phri/eval/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "phri/core/errors.hpp"

namespace phri::eval {

std::vector<Sos> butter_highpass(int order, double cutoff_hz, double rate_hz) {
    if (order <= 0 || order % 2 != 0) throw ConfigError("Butterworth order must be a positive even number");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) throw ConfigError("cutoff must lie in (0, Nyquist)");
    const double k = 2.0 * rate_hz;
    const double wc = k * std::tan(std::numbers::pi * cutoff_hz / rate_hz);
    std::vector<Sos> sos;
    for (int i = 0; i < order / 2; ++i) {
        // Analog prototype pole pair: s^2 + 2 sin(theta) s + 1 with theta from the pole angle.
        const double theta = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order);
        const double q = 2.0 * std::sin(theta);
        // High-pass analog section: s^2 / (s^2 + q wc s + wc^2); bilinear s = k (z-1)/(z+1).
        const double a0 = k * k + q * wc * k + wc * wc;
        const double a1 = 2.0 * (wc * wc - k * k);
        const double a2 = k * k - q * wc * k + wc * wc;
        const double b0 = k * k;
        sos.push_back({b0 / a0, -2.0 * b0 / a0, b0 / a0, 1.0, a1 / a0, a2 / a0});
    }
    return sos;
}

std::vector<std::array<double, 2>> sosfilt_zi(const std::vector<Sos>& sos) {
    std::vector<std::array<double, 2>> zi;
    double scale = 1.0;
    for (const auto& s : sos) {
        const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[4], a2 = s[5];
        // Solve (I - A) z = B - a * b0 for the transposed direct form II state.
        Eigen::Matrix2d m;
        m << 1.0 + a1, -1.0, a2, 1.0;
        Eigen::Vector2d rhs(b1 - a1 * b0, b2 - a2 * b0);
        const Eigen::Vector2d z = m.colPivHouseholderQr().solve(rhs);
        zi.push_back({scale * z(0), scale * z(1)});
        scale *= (b0 + b1 + b2) / (1.0 + a1 + a2);
    }
    return zi;
}

std::vector<double> sosfilt(const std::vector<Sos>& sos, std::span<const double> x,
                            std::vector<std::array<double, 2>> zi) {
    if (zi.empty()) zi.assign(sos.size(), {0.0, 0.0});
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t s = 0; s < sos.size(); ++s) {
        const auto& c = sos[s];
        double z0 = zi[s][0], z1 = zi[s][1];
        for (auto& v : y) {
            const double in = v;
            const double out = c[0] * in + z0;
            z0 = c[1] * in - c[4] * out + z1;
            z1 = c[2] * in - c[5] * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> sosfiltfilt(const std::vector<Sos>& sos, std::span<const double> x) {
    const auto n = static_cast<long>(x.size());
    if (n == 0) return {};
    const long pad = std::min<long>(3 * (2 * static_cast<long>(sos.size()) + 1), n - 1);
    std::vector<double> ext;
    ext.reserve(static_cast<std::size_t>(n + 2 * pad));
    for (long i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[static_cast<std::size_t>(i)]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (long i = n - 2; i >= n - 1 - pad; --i) ext.push_back(2.0 * x[static_cast<std::size_t>(n - 1)] - x[static_cast<std::size_t>(i)]);

    const auto zi = sosfilt_zi(sos);
    auto scaled = [&](double x0) {
        auto z = zi;
        for (auto& p : z) {
            p[0] *= x0;
            p[1] *= x0;
        }
        return z;
    };
    auto fwd = sosfilt(sos, ext, scaled(ext.front()));
    std::reverse(fwd.begin(), fwd.end());
    auto bwd = sosfilt(sos, fwd, scaled(fwd.front()));
    std::reverse(bwd.begin(), bwd.end());
    return {bwd.begin() + pad, bwd.begin() + pad + n};
}

SpectrogramPeak spectrogram_peak(std::span<const double> x, double rate_hz, int max_window, double overlap,
                                 double df) {
    SpectrogramPeak peak;
    const int n = static_cast<int>(x.size());
    if (n == 0) return peak;
    const int len = std::min(n, max_window);
    const int hop = std::max(1, static_cast<int>(std::lround(len * (1.0 - overlap))));
    const int nfft = std::max(len, static_cast<int>(std::ceil(rate_hz / df - 1e-9)));
    peak.window = len;
    peak.nfft = nfft;

    std::vector<double> w(static_cast<std::size_t>(len));
    double wsum = 0.0;
    for (int i = 0; i < len; ++i) {
        // Periodic Hann; a single sample keeps unit weight.
        w[static_cast<std::size_t>(i)] = len == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / len);
        wsum += w[static_cast<std::size_t>(i)];
    }

    Eigen::FFT<double> fft;
    std::vector<double> frame(static_cast<std::size_t>(nfft));
    std::vector<std::complex<double>> spec;
    for (int start = 0; start + len <= n; start += hop) {
        std::fill(frame.begin(), frame.end(), 0.0);
        for (int i = 0; i < len; ++i)
            frame[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(start + i)] * w[static_cast<std::size_t>(i)];
        fft.fwd(spec, frame);
        for (int k = 0; k <= nfft / 2; ++k) {
            const double scale = (k == 0 || 2 * k == nfft) ? 1.0 : 2.0;
            const double mag = scale * std::abs(spec[static_cast<std::size_t>(k)]) / wsum;
            if (mag > peak.magnitude) {
                peak.magnitude = mag;
                peak.frequency = k * rate_hz / nfft;
            }
        }
        ++peak.frames;
    }
    return peak;
}

}  // namespace phri::eval
