#pragma once

#include <complex>

#include "relaytune/relay/mrft.hpp"
#include "relaytune/tuning/phase_margin.hpp"

namespace relaytune {

inline constexpr std::size_t kWaveformSamples = 128;

struct LimitCycle {
    double amplitude = 0.0;
    double period = 0.0;
    double omega = 0.0;
    double bias = 0.0;
    /// First-harmonic amplitude of the error, averaged over the window periods.
    double harmonic_amplitude = 0.0;
    /// One period of error (mean over the window periods) and control, starting at a
    /// -h -> +h switch.
    std::vector<double> error_wave;
    std::vector<double> control_wave;
    double start_time = 0.0;
    int periods_seen = 0;
};

struct LimitCycleOptions {
    std::size_t samples = kWaveformSamples;
    int window = 6;
    double tolerance = 0.05;
    /// Subtracted from the half peak-to-peak value (noise inflates the measured peaks).
    double noise_amplitude = 0.0;
};

/// Times of -h -> +h switches in a relay control trace.
inline std::vector<double> rising_switch_times(const TimeSeries& control)
{
    std::vector<double> times;
    for (std::size_t i = 1; i < control.size(); ++i)
        if (control[i - 1] < 0.0 && control[i] > 0.0)
            times.push_back(control.time(i));
    return times;
}

/// First-harmonic amplitude of `e` over [t0, t1) taken as one period.
inline double harmonic_amplitude(const TimeSeries& e, double t0, double t1)
{
    const auto i0 = static_cast<std::size_t>(std::llround((t0 - e.start) / e.dt));
    const auto i1 = std::min(e.size(), static_cast<std::size_t>(std::llround((t1 - e.start) / e.dt)));
    require(i1 > i0 + 2, "harmonic amplitude: period shorter than three samples");
    double mean = 0.0;
    for (std::size_t i = i0; i < i1; ++i)
        mean += e[i];
    mean /= static_cast<double>(i1 - i0);
    std::complex<double> c{0.0, 0.0};
    const double w = 2.0 * kPi / (t1 - t0);
    std::complex<double> z = std::polar(1.0, -w * (e.time(i0) - t0));
    const auto rot = std::polar(1.0, -w * e.dt);
    for (std::size_t i = i0; i < i1; ++i, z *= rot)
        c += (e[i] - mean) * z;
    return 2.0 * std::abs(c) / static_cast<double>(i1 - i0);
}

/// Steady oscillation at the end of a relay test; throws "not converged" when the last
/// `window` periods disagree in period or first-harmonic amplitude by more than
/// `tolerance`. The harmonic is used for the check because it is insensitive to
/// measurement noise riding on the peaks.
inline LimitCycle detect_limit_cycle(const TimeSeries& error, const TimeSeries& control,
                                     const LimitCycleOptions& opt = {})
{
    error.validate("limit cycle error trace");
    control.validate("limit cycle control trace");
    require(error.size() == control.size() && error.dt == control.dt && error.start == control.start,
            "limit cycle: error and control traces must share sampling");
    require(opt.samples >= 8 && opt.window >= 2, "limit cycle: bad options");
    const auto sw = rising_switch_times(control);
    const int periods = static_cast<int>(sw.size()) - 1;
    require(periods >= opt.window, "limit cycle: not converged (only " + std::to_string(std::max(0, periods)) +
                                       " complete relay periods)");

    struct Period {
        double t0, t1, amp, harmonic, bias;
    };
    std::vector<Period> last;
    for (int p = periods - opt.window; p < periods; ++p) {
        const double t0 = sw[static_cast<std::size_t>(p)];
        const double t1 = sw[static_cast<std::size_t>(p) + 1];
        const auto i0 = static_cast<std::size_t>(std::llround((t0 - error.start) / error.dt));
        const auto i1 = static_cast<std::size_t>(std::llround((t1 - error.start) / error.dt));
        double lo = kInf, hi = -kInf, sum = 0.0;
        for (std::size_t i = i0; i < i1; ++i) {
            lo = std::min(lo, error[i]);
            hi = std::max(hi, error[i]);
            sum += error[i];
        }
        last.push_back({t0, t1, 0.5 * (hi - lo) - opt.noise_amplitude, harmonic_amplitude(error, t0, t1),
                        sum / static_cast<double>(i1 - i0)});
    }
    auto spread = [&](auto get) {
        double lo = kInf, hi = -kInf;
        for (const auto& p : last) {
            lo = std::min(lo, get(p));
            hi = std::max(hi, get(p));
        }
        return lo > 0.0 ? hi / lo - 1.0 : kInf;
    };
    const double amp_spread = spread([](const Period& p) { return p.harmonic; });
    const double per_spread = spread([](const Period& p) { return p.t1 - p.t0; });
    require(amp_spread <= opt.tolerance && per_spread <= opt.tolerance,
            "limit cycle: not converged (amplitude spread " + std::to_string(amp_spread * 100.0) +
                "%, period spread " + std::to_string(per_spread * 100.0) + "%)");

    LimitCycle lc;
    for (const auto& p : last) {
        lc.amplitude += p.amp / opt.window;
        lc.period += (p.t1 - p.t0) / opt.window;
        lc.bias += p.bias / opt.window;
        lc.harmonic_amplitude += p.harmonic / opt.window;
    }
    require(lc.amplitude > 0.0, "limit cycle: zero amplitude");
    lc.omega = 2.0 * kPi / lc.period;
    lc.periods_seen = periods;
    const Period& tail = last.back();
    lc.start_time = tail.t0;
    lc.error_wave.assign(opt.samples, 0.0);
    lc.control_wave.resize(opt.samples);
    for (const auto& p : last) {
        const double step = (p.t1 - p.t0) / static_cast<double>(opt.samples);
        for (std::size_t k = 0; k < opt.samples; ++k)
            lc.error_wave[k] += error.at_time(p.t0 + step * static_cast<double>(k)) / opt.window;
    }
    const double step = (tail.t1 - tail.t0) / static_cast<double>(opt.samples);
    for (std::size_t k = 0; k < opt.samples; ++k) {
        const double t = tail.t0 + step * static_cast<double>(k);
        lc.control_wave[k] = control.values[std::min(
            control.size() - 1, static_cast<std::size_t>(std::floor((t - control.start) / control.dt + 1e-9)))];
    }
    return lc;
}

struct HarmonicBalance {
    double amplitude = 0.0;
    double omega = 0.0;
    [[nodiscard]] double period() const { return 2.0 * kPi / omega; }
};

/// Describing-function prediction of the MRFT oscillation: arg L(j W) = -pi + asin(beta),
/// a_0 = 4h/pi |L(j W)|. `shaping` adds the sampler/hold of a discrete relay loop.
inline HarmonicBalance harmonic_balance_predict(const PlantResponse& plant, const MrftConfig& cfg,
                                                const LoopShaping& shaping = {})
{
    cfg.validate();
    const double target = -kPi + std::asin(cfg.beta);
    const double w = phase_crossing(plant, shaping, target);
    require(w > 0.0, "harmonic balance: no phase crossing at " + std::to_string(target * 180.0 / kPi) +
                         " deg in [1e-3, 1e4] rad/s");
    const double mag = std::abs(shaping.controller({1.0, 0.0}, w) * plant.response(w));
    return {4.0 * cfg.h / kPi * mag, w};
}

inline HarmonicBalance harmonic_balance_predict(const TransferFunctionModel& model, const MrftConfig& cfg,
                                                const LoopShaping& shaping = {})
{
    model.validate();
    require(model.integrator_order >= 1 || model.delay > 0.0,
            "harmonic balance: model never reaches the required phase");
    return harmonic_balance_predict(PlantResponse::of(model), cfg, shaping);
}

} // namespace relaytune
