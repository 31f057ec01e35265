#pragma once

#include "relaytune/core.hpp"

namespace relaytune {

struct MrftConfig {
    double h = 1.0;
    double beta = -0.72;

    void validate() const
    {
        require(std::isfinite(h) && h > 0.0, "relay amplitude h must be positive");
        require(std::isfinite(beta) && beta > -1.0 && beta < 1.0, "beta must lie in (-1, 1)");
    }
};

struct NpMrftConfig {
    MrftConfig base;
    /// Observation window after an extremum before it is accepted as the half-cycle peak.
    double tau_obs = 0.0;
    /// Noise amplitude used in the threshold correction.
    double a_n = 0.0;
    /// High-pass cutoff for on-line noise estimation; 0 selects 10 / T_0.
    double noise_highpass_cutoff = 0.0;

    void validate() const
    {
        base.validate();
        require(std::isfinite(tau_obs) && tau_obs >= 0.0, "tau_obs must be non-negative");
        require(std::isfinite(a_n) && a_n >= 0.0, "noise amplitude a_n must be non-negative");
        require(noise_highpass_cutoff >= 0.0, "noise high-pass cutoff must be non-negative");
    }
};

/// Switching state of one relay test.
///
/// Extrema are tracked from the last relay switch: the -h switch watches the maximum built
/// since the switch to +h, the +h switch the minimum since the switch to -h. For beta <= 0
/// this is the same as tracking from the zero crossing; for beta > 0 it keeps the peak
/// after the error has crossed zero again.
struct RelayState {
    int sign = +1;
    double e_max = 0.0, e_min = 0.0;
    double t_max = 0.0, t_min = 0.0;
    double e_gmax = 0.0, e_gmin = 0.0;
    double t_gmax = 0.0, t_gmin = 0.0;
    double t0_plus = 0.0, t0_minus = 0.0;
    double b1 = 0.0, b2 = 0.0;
    /// An extremum of the right sign is confirmed for the pending switch.
    bool armed = true;
    bool inhibited = false;
    double t_switch = 0.0;
    /// Error at the last switch.
    double e_switch = 0.0;
    int period = 0;
    int switches = 0;
    double last_e = 0.0;
    bool primed = false;

    /// Start of a test: u = +h, first switch allowed immediately (t_g = -tau_obs).
    static RelayState initial(double tau_obs = 0.0)
    {
        RelayState s;
        s.t_gmax = s.t_gmin = -tau_obs;
        s.t_max = s.t_min = -tau_obs;
        s.t_switch = -tau_obs;
        return s;
    }

    [[nodiscard]] double control(double h) const { return sign * h; }
};

namespace detail {

inline double relay_core(RelayState& s, double e, double t, double h, double beta, double tau_obs, double a_n)
{
    require(std::isfinite(e), "relay: non-finite error sample at t=" + std::to_string(t));
    if (s.primed) {
        if (s.last_e <= 0.0 && e > 0.0)
            s.t0_plus = t;
        if (s.last_e >= 0.0 && e < 0.0)
            s.t0_minus = t;
    }
    s.last_e = e;
    s.primed = true;

    const double corr = a_n * (1.0 - beta);
    // a false switch only counts once e has moved well past the switching value
    const double slack = std::max(2.0 * a_n, 0.25 * (s.e_gmax - s.e_gmin));
    if (s.sign > 0) {
        // waiting for the peak of the positive half-cycle
        if (e > s.e_max) {
            s.e_max = e;
            s.t_max = t;
        }
        // e driven past its switching value beyond the noise band without the expected
        // extremum: the switch was false, so re-arm on the previous confirmed peak
        const bool reversed = s.switches > 0 && e < s.e_switch - slack && s.e_max <= 0.0;
        if ((s.e_max > 0.0 && t - s.t_max >= tau_obs) || reversed) {
            if (s.e_max > 0.0) {
                s.e_gmax = s.e_max;
                s.t_gmax = s.t_max;
            }
            s.armed = true;
        }
        s.b2 = beta * s.e_gmax + corr;
        s.inhibited = !s.armed || t < s.t_max + tau_obs;
        // the very first switch needs the error to have left zero
        if (!s.inhibited && e <= -s.b2 && (s.switches > 0 || e < 0.0)) {
            s.sign = -1;
            ++s.switches;
            s.t_switch = t;
            s.e_switch = e;
            s.e_min = std::min(0.0, e);
            s.t_min = t;
            s.armed = false;
            s.inhibited = true;
        }
    } else {
        if (e < s.e_min) {
            s.e_min = e;
            s.t_min = t;
        }
        const bool reversed = e > s.e_switch + slack && s.e_min >= 0.0;
        if ((s.e_min < 0.0 && t - s.t_min >= tau_obs) || reversed) {
            if (s.e_min < 0.0) {
                s.e_gmin = s.e_min;
                s.t_gmin = s.t_min;
            }
            s.armed = true;
        }
        s.b1 = -beta * s.e_gmin + corr;
        s.inhibited = !s.armed || t < s.t_min + tau_obs;
        if (!s.inhibited && e >= s.b1) {
            s.sign = +1;
            ++s.switches;
            s.t_switch = t;
            s.e_switch = e;
            s.e_max = std::max(0.0, e);
            s.t_max = t;
            s.armed = false;
            s.inhibited = true;
            ++s.period;
        }
    }
    return s.sign * h;
}

} // namespace detail

/// Modified relay: +h until e <= -beta e_max, then -h until e >= -beta e_min.
inline double mrft_step(RelayState& state, double e, double t, const MrftConfig& cfg)
{
    return detail::relay_core(state, e, t, cfg.h, cfg.beta, 0.0, 0.0);
}

/// Noise-protected modified relay. A peak counts only once it has stood for tau_obs, the
/// thresholds carry the a_n (1 - beta) correction, and switching is inhibited from each
/// switch until the confirmed peak time plus tau_obs.
inline double np_mrft_step(RelayState& state, double e, double t, const NpMrftConfig& cfg)
{
    return detail::relay_core(state, e, t, cfg.base.h, cfg.base.beta, cfg.tau_obs, cfg.a_n);
}

/// Lowest beta the observation window can realize for an oscillation of period T_0.
inline double beta_min(double tau_obs, double period)
{
    require(tau_obs > 0.0 && period > 0.0, "beta_min: tau_obs and T_0 must be positive");
    require(tau_obs < period / 4.0, "beta_min: tau_obs must be below T_0 / 4");
    return -1.0 + std::sin(2.0 * kPi * tau_obs / period);
}

} // namespace relaytune
