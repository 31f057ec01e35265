#pragma once

#include <complex>
#include <functional>

#include "relaytune/model/closed_loop.hpp"

namespace relaytune {

/// Sampled-loop elements that sit between the process and the PD law.
/// A default-constructed value describes an ideal continuous loop.
struct LoopShaping {
    double dt_ctrl = 0.0;
    double filter_cutoff_hz = 0.0;

    static LoopShaping from(const SimulationConfig& cfg)
    {
        return {cfg.dt_ctrl, cfg.filter_cutoff_hz};
    }

    /// Filter, zero-order hold and discrete differentiation collapsed into
    /// the factor multiplying G(j omega) for a given PD law.
    [[nodiscard]] std::complex<double> controller(PdGains g, double omega) const
    {
        using C = std::complex<double>;
        const C j(0.0, 1.0);
        if (dt_ctrl <= 0.0) {
            C c = g.kp + j * omega * g.kd;
            if (filter_cutoff_hz > 0.0)
                c *= analog_butterworth(omega);
            return c;
        }
        const C z1 = std::exp(-j * omega * dt_ctrl);
        const C deriv = (1.0 - z1) / dt_ctrl;
        C c = g.kp + g.kd * deriv;
        if (filter_cutoff_hz > 0.0 && filter_cutoff_hz < 0.5 / dt_ctrl)
            c *= Biquad::low_pass(filter_cutoff_hz, dt_ctrl).response(omega);
        // zero-order hold: (1 - e^{-j w T}) / (j w T)
        c *= (1.0 - z1) / (j * omega * dt_ctrl);
        return c;
    }

    [[nodiscard]] std::complex<double> analog_butterworth(double omega) const
    {
        const double wc = 2.0 * kPi * filter_cutoff_hz;
        const std::complex<double> s(0.0, omega / wc);
        return 1.0 / (s * s + std::sqrt(2.0) * s + 1.0);
    }
};

/// Frequency response of an arbitrary linear plant and the number of pure integrators
/// it carries (anchors phase unwrapping at low frequency).
struct PlantResponse {
    std::function<std::complex<double>(double)> response;
    int integrator_order = 0;

    static PlantResponse of(const TransferFunctionModel& m)
    {
        return {[m](double w) { return frequency_response(m, w); }, m.integrator_order};
    }
};

namespace detail {

struct PhaseScan {
    std::vector<double> omega, magnitude, phase;
};

/// Samples |L| and the unwrapped phase of L on a log grid over [w_lo, w_hi].
template <class F>
PhaseScan scan_loop(F&& loop, int integrator_order, double w_lo = 1e-3, double w_hi = 1e4, int points = 700)
{
    PhaseScan s;
    s.omega.reserve(points);
    const double step = std::log(w_hi / w_lo) / (points - 1);
    double prev = 0.0;
    for (int i = 0; i < points; ++i) {
        const double w = w_lo * std::exp(step * i);
        const std::complex<double> l = loop(w);
        double ph = std::arg(l);
        if (i == 0) {
            const double anchor = -integrator_order * kPi / 2.0;
            ph += 2.0 * kPi * std::round((anchor - ph) / (2.0 * kPi));
        } else {
            ph += 2.0 * kPi * std::round((prev - ph) / (2.0 * kPi));
        }
        prev = ph;
        s.omega.push_back(w);
        s.magnitude.push_back(std::abs(l));
        s.phase.push_back(ph);
    }
    return s;
}

template <class F>
double unwrap_near(F&& loop, double w, double reference_phase)
{
    double ph = std::arg(loop(w));
    return ph + 2.0 * kPi * std::round((reference_phase - ph) / (2.0 * kPi));
}

/// Bisection in log-frequency for g(w) = 0 given a sign change on [a, b].
template <class G>
double bisect_log(G&& g, double a, double b, int iters = 60)
{
    double ga = g(a);
    for (int i = 0; i < iters; ++i) {
        const double m = std::sqrt(a * b);
        const double gm = g(m);
        if ((gm > 0.0) == (ga > 0.0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return std::sqrt(a * b);
}

} // namespace detail

/// Smallest phase margin (degrees) over all gain crossovers of C(jw) G(jw); +inf without crossover.
inline double phase_margin(const PlantResponse& plant, PdGains gains, const LoopShaping& shaping = {})
{
    auto loop = [&](double w) { return shaping.controller(gains, w) * plant.response(w); };
    const auto scan = detail::scan_loop(loop, plant.integrator_order);
    double pm = kInf;
    for (std::size_t i = 1; i < scan.omega.size(); ++i) {
        const double m0 = scan.magnitude[i - 1] - 1.0;
        const double m1 = scan.magnitude[i] - 1.0;
        if ((m0 > 0.0) == (m1 > 0.0))
            continue;
        const double wc = detail::bisect_log([&](double w) { return std::abs(loop(w)) - 1.0; }, scan.omega[i - 1],
                                             scan.omega[i]);
        const double ph = detail::unwrap_near(loop, wc, scan.phase[i]);
        pm = std::min(pm, 180.0 + ph * 180.0 / kPi);
    }
    return pm;
}

inline double phase_margin(const TransferFunctionModel& model, PdGains gains, const LoopShaping& shaping = {})
{
    return phase_margin(PlantResponse::of(model), gains, shaping);
}

/// Lowest frequency at which the unwrapped phase of shaping * G reaches `target_phase`
/// (radians); returns 0 when it never does.
inline double phase_crossing(const PlantResponse& plant, const LoopShaping& shaping, double target_phase)
{
    auto loop = [&](double w) { return shaping.controller({1.0, 0.0}, w) * plant.response(w); };
    const auto scan = detail::scan_loop(loop, plant.integrator_order);
    for (std::size_t i = 1; i < scan.omega.size(); ++i) {
        if (scan.phase[i - 1] > target_phase && scan.phase[i] <= target_phase) {
            const double ref = scan.phase[i];
            return detail::bisect_log(
                [&](double w) { return detail::unwrap_near(loop, w, ref) - target_phase; }, scan.omega[i - 1],
                scan.omega[i]);
        }
    }
    return 0.0;
}

} // namespace relaytune
