#pragma once

#include <optional>
#include <random>

#include "relaytune/model/filters.hpp"

namespace relaytune {

struct NoiseEstimate {
    double a_n = 0.0;
    double t_n = 0.0;
    double omega_n = 0.0;
    double psi_n = 0.0;
    /// False when no oscillatory peaks were found; t_n and omega_n are then meaningless.
    bool period_defined = false;
};

/// Amplitude and period of the high-frequency content of `e`.
///
/// The signal is high-passed (second-order Butterworth) and split into lobes at zero
/// crossings with a small hysteresis. T_n is the mean spacing of consecutive positive lobe
/// peaks. a_n is the 99th percentile of |e_hp|: exact for a sinusoid and a "peak" bound
/// rather than a mean excursion for broadband noise.
inline NoiseEstimate estimate_noise(const TimeSeries& e, double cutoff_hz)
{
    e.validate("estimate_noise input");
    require(cutoff_hz > 0.0, "estimate_noise: cutoff must be positive");
    NoiseEstimate est;
    if (e.size() < 8)
        return est;
    const double fc = std::min(cutoff_hz, 0.45 / e.dt);
    Biquad hp = Biquad::high_pass(fc, e.dt);
    hp.settle(0.0);
    std::vector<double> y(e.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        y[i] = hp(e[i]);
    // drop the filter's start-up transient
    const auto skip = std::min(e.size() / 4, static_cast<std::size_t>(std::ceil(2.0 / (fc * e.dt))));
    std::vector<double> body(y.begin() + static_cast<std::ptrdiff_t>(skip), y.end());
    if (body.size() < 4)
        return est;

    double ms = 0.0;
    for (double v : body)
        ms += v * v;
    const double rms = std::sqrt(ms / static_cast<double>(body.size()));
    if (rms <= 0.0)
        return est;
    std::vector<double> mags(body.size());
    std::transform(body.begin(), body.end(), mags.begin(), [](double v) { return std::abs(v); });
    est.a_n = percentile(mags, 99.0);

    const double hyst = 0.1 * rms;
    int lobe = 0;
    double peak = 0.0;
    std::size_t peak_at = 0;
    std::vector<std::size_t> positive_peaks;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const double v = body[i];
        const int s = v > hyst ? 1 : v < -hyst ? -1 : 0;
        if (s != 0 && s != lobe) {
            if (lobe > 0)
                positive_peaks.push_back(peak_at);
            lobe = s;
            peak = 0.0;
        }
        if (lobe != 0 && std::abs(v) > peak && (v > 0) == (lobe > 0)) {
            peak = std::abs(v);
            peak_at = i;
        }
    }
    if (positive_peaks.size() >= 2) {
        const double span = static_cast<double>(positive_peaks.back() - positive_peaks.front()) * e.dt;
        est.t_n = span / static_cast<double>(positive_peaks.size() - 1);
        est.omega_n = 2.0 * kPi / est.t_n;
        est.period_defined = true;
    } else {
        est.a_n = 0.0;
    }
    return est;
}

/// Measurement noise a_n sin(Omega_n t + psi_n) with optional random jitter in amplitude
/// and frequency, plus white Gaussian noise.
struct NoiseSpec {
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    /// Relative (uniform) fluctuation of amplitude and frequency, resampled every noise period.
    double fluctuation = 0.0;
    double white_sigma = 0.0;
    double bias = 0.0;
    std::uint64_t seed = 1;

    void validate() const
    {
        require(amplitude >= 0.0 && white_sigma >= 0.0, "noise amplitudes must be non-negative");
        require(amplitude == 0.0 || omega > 0.0, "sinusoidal noise needs a positive frequency");
        require(fluctuation >= 0.0 && fluctuation < 1.0, "noise fluctuation must lie in [0, 1)");
    }
};

class NoiseSource {
public:
    NoiseSource() = default;
    explicit NoiseSource(const NoiseSpec& spec) : spec_(spec), rng_(spec.seed), phase_(spec.phase)
    {
        spec.validate();
        amp_ = spec.amplitude;
        omega_ = spec.omega;
    }

    /// Noise sample after advancing by dt.
    double next(double dt)
    {
        double v = spec_.bias;
        if (spec_.amplitude > 0.0) {
            phase_ += omega_ * dt;
            if (phase_ >= 2.0 * kPi) {
                phase_ = std::fmod(phase_, 2.0 * kPi);
                if (spec_.fluctuation > 0.0) {
                    std::uniform_real_distribution<double> u(-spec_.fluctuation, spec_.fluctuation);
                    amp_ = spec_.amplitude * (1.0 + u(rng_));
                    omega_ = spec_.omega * (1.0 + u(rng_));
                }
            }
            v += amp_ * std::sin(phase_);
        }
        if (spec_.white_sigma > 0.0)
            v += std::normal_distribution<double>(0.0, spec_.white_sigma)(rng_);
        return v;
    }

private:
    NoiseSpec spec_;
    std::mt19937_64 rng_;
    double phase_ = 0.0;
    double amp_ = 0.0;
    double omega_ = 0.0;
};

} // namespace relaytune
