#pragma once

#include "relaytune/relay/limit_cycle.hpp"

namespace relaytune {

struct FeatureOptions {
    std::size_t samples = kWaveformSamples;
    /// Append the aligned control waveform (divided by its peak) after the error waveform.
    bool include_control = false;
    /// Harmonics kept when resampling the error waveform (0 keeps the raw samples). The
    /// period is known, so a truncated Fourier series removes most measurement noise.
    int harmonics = 16;

    [[nodiscard]] std::size_t size() const { return (include_control ? 2 * samples : samples) + 2; }
};

namespace detail {

inline double circular_sample(const std::vector<double>& w, double pos)
{
    const auto n = static_cast<double>(w.size());
    pos = std::fmod(pos, n);
    if (pos < 0.0)
        pos += n;
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return (1.0 - f) * w[i % w.size()] + f * w[(i + 1) % w.size()];
}

/// Fractional index where the fundamental of `w` crosses zero going up.
inline double fundamental_upcrossing(const std::vector<double>& w)
{
    std::complex<double> c{0.0, 0.0};
    const auto n = static_cast<double>(w.size());
    for (std::size_t k = 0; k < w.size(); ++k)
        c += w[k] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / n);
    require(std::abs(c) > 0.0, "preprocess: waveform has no fundamental component");
    // fundamental ~ cos(2 pi k / n + arg c); rising zero where the argument is -pi/2
    double pos = (-0.5 * kPi - std::arg(c)) * n / (2.0 * kPi);
    pos = std::fmod(pos, n);
    return pos < 0.0 ? pos + n : pos;
}

} // namespace detail

/// Classifier input for a converged cycle.
///
/// The error waveform is bias-removed, rotated to start at the rising zero crossing of its
/// fundamental (a crossing of the raw samples is ambiguous once measurement noise is
/// present), resampled to `samples` points from its first `harmonics` harmonics and divided
/// by its peak. Two scalars follow:
/// bias over first-harmonic amplitude and log T_0.
inline std::vector<double> preprocess(const LimitCycle& cycle, const FeatureOptions& opt = {})
{
    require(cycle.amplitude > 0.0 && cycle.harmonic_amplitude > 0.0, "preprocess: cycle amplitude is zero");
    require(cycle.period > 0.0, "preprocess: cycle period must be positive");
    require(cycle.error_wave.size() >= 8, "preprocess: cycle waveform too short");
    require(opt.samples >= 8, "preprocess: need at least 8 samples");

    std::vector<double> w(cycle.error_wave);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    for (double& v : w)
        v -= mean;
    require(opt.harmonics >= 0, "preprocess: harmonic count must be non-negative");
    const double start = detail::fundamental_upcrossing(w);
    const double stride = static_cast<double>(w.size()) / static_cast<double>(opt.samples);
    const auto nw = static_cast<double>(w.size());
    const int kmax = std::min<int>(opt.harmonics, static_cast<int>(w.size() / 2) - 1);
    std::vector<std::complex<double>> coef;
    for (int h = 1; h <= kmax; ++h) {
        std::complex<double> c{0.0, 0.0}, z{1.0, 0.0};
        const auto rot = std::polar(1.0, -2.0 * kPi * h / nw);
        for (std::size_t k = 0; k < w.size(); ++k, z *= rot)
            c += w[k] * z;
        coef.push_back(2.0 * c / nw);
    }

    std::vector<double> f;
    f.reserve(opt.size());
    double peak = 0.0;
    for (std::size_t k = 0; k < opt.samples; ++k) {
        const double pos = start + stride * static_cast<double>(k);
        double v = 0.0;
        if (opt.harmonics == 0) {
            v = detail::circular_sample(w, pos);
        } else {
            const auto base = std::polar(1.0, 2.0 * kPi * pos / nw);
            std::complex<double> z = base;
            for (int h = 1; h <= kmax; ++h, z *= base)
                v += std::real(coef[static_cast<std::size_t>(h - 1)] * z);
        }
        f.push_back(v);
        peak = std::max(peak, std::abs(v));
    }
    require(peak > 0.0, "preprocess: flat waveform");
    for (double& v : f)
        v /= peak;

    if (opt.include_control) {
        require(cycle.control_wave.size() == cycle.error_wave.size(), "preprocess: control waveform size mismatch");
        double h = 0.0;
        for (double u : cycle.control_wave)
            h = std::max(h, std::abs(u));
        require(h > 0.0, "preprocess: zero control waveform");
        for (std::size_t k = 0; k < opt.samples; ++k) {
            // nearest sample keeps the relay edges sharp
            const double pos = std::fmod(start + stride * static_cast<double>(k), static_cast<double>(w.size()));
            f.push_back(cycle.control_wave[static_cast<std::size_t>(pos) % w.size()] / h);
        }
    }
    f.push_back(cycle.bias / cycle.harmonic_amplitude);
    f.push_back(std::log(cycle.period));
    return f;
}

} // namespace relaytune
