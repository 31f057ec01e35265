#pragma once

#include <cstdint>
#include <optional>

#include "relaytune/model/filters.hpp"
#include "relaytune/model/lti.hpp"

namespace relaytune {

struct PdGains {
    double kp = 0.0;
    double kd = 0.0;

    void validate() const
    {
        require(std::isfinite(kp) && std::isfinite(kd), "PD gains must be finite");
        require(kp >= 0.0 && kd >= 0.0, "PD gains must be non-negative");
    }
    [[nodiscard]] PdGains scaled(double c) const { return {kp * c, kd * c}; }
    bool operator==(const PdGains&) const = default;
};

struct Saturation {
    double low = -kInf;
    double high = kInf;

    [[nodiscard]] double operator()(double u) const { return std::clamp(u, low, high); }
    [[nodiscard]] bool active() const { return std::isfinite(low) || std::isfinite(high); }
};

struct SimulationConfig {
    double dt_sim = 1e-3;
    double dt_ctrl = 5e-3;
    double horizon = 20.0;
    Saturation actuator;
    double outer_saturation = kInf;
    /// Cutoff of the second-order low-pass on the measured error; 0 disables it.
    double filter_cutoff_hz = 20.0;
    std::uint64_t rng_seed = 0;
    /// Differentiate the filtered measurement instead of the filtered error.
    bool derivative_on_measurement = true;
    /// Stop once |e| stays under settle_band * step for settle_hold seconds.
    bool early_stop = true;
    double settle_band = 1e-3;
    double settle_hold = 2.0;

    [[nodiscard]] int ticks_per_control() const
    {
        return static_cast<int>(std::llround(dt_ctrl / dt_sim));
    }

    void validate() const
    {
        require(dt_sim > 0.0 && dt_ctrl > 0.0, "time steps must be positive");
        require(dt_sim <= dt_ctrl, "dt_sim must not exceed dt_ctrl");
        const double r = dt_ctrl / dt_sim;
        require(std::abs(r - std::round(r)) < 1e-9, "dt_ctrl must be an integer multiple of dt_sim");
        require(horizon > 0.0, "horizon must be positive");
        require(actuator.low < actuator.high, "saturation low must be below high");
        require(filter_cutoff_hz >= 0.0, "filter cutoff must be non-negative");
    }

    /// The idealized loop: continuous-like control, no filter, no saturation.
    static SimulationConfig ideal(double dt = 1e-3)
    {
        SimulationConfig c;
        c.dt_sim = dt;
        c.dt_ctrl = dt;
        c.filter_cutoff_hz = 0.0;
        return c;
    }
};

inline Biquad measurement_filter(const SimulationConfig& cfg)
{
    if (cfg.filter_cutoff_hz <= 0.0)
        return {};
    return Biquad::low_pass(cfg.filter_cutoff_hz, cfg.dt_ctrl);
}

/// u = Kp e_f + Kd d(.)/dt, backward difference at the control rate of either the filtered
/// error or the filtered measurement.
class PdController {
public:
    PdController() = default;
    PdController(PdGains gains, const SimulationConfig& cfg, Saturation sat)
        : gains_(gains), filter_(measurement_filter(cfg)), dt_(cfg.dt_ctrl), sat_(sat),
          on_measurement_(cfg.derivative_on_measurement)
    {
    }

    double update(double error) { return update(error, 0.0); }

    /// `reference` only matters for derivative-on-measurement, where the differentiated
    /// signal is the filtered (error - reference) = -measurement.
    double update(double error, double reference)
    {
        const double ef = filter_(error);
        const double d_in = on_measurement_ ? ef - reference_filter(reference) : ef;
        const double de = primed_ ? (d_in - last_) / dt_ : 0.0;
        last_ = d_in;
        primed_ = true;
        return sat_(gains_.kp * ef + gains_.kd * de);
    }

    void set_gains(PdGains g) { gains_ = g; }
    [[nodiscard]] PdGains gains() const { return gains_; }

    /// Restarts the derivative and filter from a steady error value.
    void reset(double error = 0.0)
    {
        filter_.reset();
        filter_.settle(error);
        last_ = error;
        primed_ = true;
    }

private:
    PdGains gains_;
    Biquad filter_;
    double dt_ = 5e-3;
    Saturation sat_;
    bool on_measurement_ = false;
    Biquad ref_filter_;
    bool ref_filter_init_ = false;
    double last_ = 0.0;
    bool primed_ = false;

    double reference_filter(double r)
    {
        if (!ref_filter_init_) {
            ref_filter_ = filter_;
            ref_filter_.reset();
            ref_filter_init_ = true;
        }
        return ref_filter_(r);
    }
};

struct RunTraces {
    double dt = 1e-3;
    std::vector<double> t, reference, output, error, control;

    void reserve(std::size_t n)
    {
        for (auto* v : {&t, &reference, &output, &error, &control})
            v->reserve(n);
    }
    [[nodiscard]] std::size_t size() const { return t.size(); }
};

struct StepResult {
    RunTraces traces;
    double ise = 0.0;
    bool unstable = false;
};

/// Trapezoidal integral of e^2.
inline double ise_cost(const TimeSeries& error)
{
    require(!error.empty(), "ise_cost: empty series");
    error.validate("ise_cost input");
    if (error.size() == 1)
        return 0.0;
    double s = 0.0;
    for (std::size_t i = 1; i < error.size(); ++i)
        s += 0.5 * (error[i - 1] * error[i - 1] + error[i] * error[i]);
    return s * error.dt;
}

/// Step-tracking run of a sampled PD loop around any plant exposing output()/advance().
template <class Plant>
StepResult run_pd_step(Plant& plant, PdGains gains, double amplitude, const SimulationConfig& cfg,
                       bool record)
{
    cfg.validate();
    gains.validate();
    const int ratio = cfg.ticks_per_control();
    const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt_sim));
    PdController pd(gains, cfg, cfg.actuator);
    StepResult res;
    res.traces.dt = cfg.dt_sim;
    if (record)
        res.traces.reserve(steps + 1);
    const double diverge = 1e6 * std::max(std::abs(amplitude), 1e-12);
    const double band = cfg.settle_band * std::abs(amplitude);
    const auto hold_steps = static_cast<std::size_t>(std::llround(cfg.settle_hold / cfg.dt_sim));
    std::size_t settled = 0;
    double u = 0.0;
    double prev_e2 = 0.0;
    double ise = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double y = plant.output();
        const double e = amplitude - y;
        if (!std::isfinite(y) || std::abs(y) > diverge) {
            res.unstable = true;
            res.ise = kInf;
            return res;
        }
        if (k > 0)
            ise += 0.5 * (prev_e2 + e * e) * cfg.dt_sim;
        prev_e2 = e * e;
        if (k % static_cast<std::size_t>(ratio) == 0)
            u = pd.update(e, amplitude);
        if (record) {
            res.traces.t.push_back(static_cast<double>(k) * cfg.dt_sim);
            res.traces.reference.push_back(amplitude);
            res.traces.output.push_back(y);
            res.traces.error.push_back(e);
            res.traces.control.push_back(u);
        }
        settled = std::abs(e) < band ? settled + 1 : 0;
        if (cfg.early_stop && settled >= hold_steps && k > hold_steps)
            break;
        plant.advance(u);
    }
    res.ise = ise;
    return res;
}

inline StepResult closed_loop_step(const TransferFunctionModel& model, PdGains gains, double amplitude,
                                   const SimulationConfig& cfg, bool record = true)
{
    LtiStepper plant(model, cfg.dt_sim);
    return run_pd_step(plant, gains, amplitude, cfg, record);
}

struct StepMetrics {
    double overshoot_percent = 0.0;
    double rise_time = kInf;
    double settling_time = kInf;
    double peak = 0.0;
};

/// Overshoot, 10-90 % rise time and 2 % settling time of a recorded step run.
inline StepMetrics step_metrics(const RunTraces& tr)
{
    StepMetrics m;
    if (tr.size() == 0)
        return m;
    const double r = tr.reference.back();
    if (r == 0.0)
        return m;
    double peak = -kInf;
    double t10 = kInf, t90 = kInf;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double y = tr.output[i] / r;
        peak = std::max(peak, y);
        if (t10 == kInf && y >= 0.1)
            t10 = tr.t[i];
        if (t90 == kInf && y >= 0.9)
            t90 = tr.t[i];
    }
    m.peak = peak * r;
    m.overshoot_percent = std::max(0.0, (peak - 1.0) * 100.0);
    if (std::isfinite(t10) && std::isfinite(t90))
        m.rise_time = t90 - t10;
    for (std::size_t i = tr.size(); i-- > 0;) {
        if (std::abs(tr.output[i] / r - 1.0) > 0.02) {
            m.settling_time = i + 1 < tr.size() ? tr.t[i + 1] : kInf;
            break;
        }
        if (i == 0)
            m.settling_time = 0.0;
    }
    return m;
}

/// Process gain K for which the closed loop (model with its gain replaced, gains g) has
/// the given 10-90 % rise time. Bisection in log K over [lo, hi]; rise time falls with K.
inline double gain_for_rise_time(const TransferFunctionModel& model, PdGains g, double rise_time,
                                 SimulationConfig cfg, double lo = 0.05, double hi = 500.0)
{
    require(rise_time > 0.0, "gain_for_rise_time: rise time must be positive");
    cfg.early_stop = false;
    cfg.horizon = std::max(cfg.horizon, 20.0 * rise_time);
    auto tr = [&](double k) { return step_metrics(closed_loop_step(model.with_gain(k), g, 1.0, cfg).traces).rise_time; };
    require(tr(lo) > rise_time && tr(hi) < rise_time, "gain_for_rise_time: rise time not bracketed");
    for (int it = 0; it < 50; ++it) {
        const double m = std::sqrt(lo * hi);
        (tr(m) > rise_time ? lo : hi) = m;
    }
    return std::sqrt(lo * hi);
}

} // namespace relaytune
