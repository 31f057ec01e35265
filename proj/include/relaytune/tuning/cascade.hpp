#pragma once

#include "relaytune/tuning/phase_margin.hpp"

namespace relaytune {

/// A tuned inner (attitude) loop: process plus its PD gains.
struct InnerLoop {
    TransferFunctionModel model;
    PdGains gains;
};

/// Outer process driven by a closed inner loop: r_in -> [PD + G_inner] -> G_outer -> y.
struct CascadePlant {
    InnerLoop inner;
    TransferFunctionModel outer;
    /// Sampling and filter of the inner loop.
    SimulationConfig inner_cfg;
};

class CascadeStepper {
public:
    CascadeStepper(const CascadePlant& p, double dt)
        : inner_(p.inner.model, dt), outer_(p.outer, dt),
          pd_(p.inner.gains, p.inner_cfg, p.inner_cfg.actuator),
          ratio_(static_cast<int>(std::llround(p.inner_cfg.dt_ctrl / dt)))
    {
        require(ratio_ >= 1 && std::abs(p.inner_cfg.dt_ctrl / dt - ratio_) < 1e-9,
                "cascade: inner dt_ctrl must be a multiple of the integration step");
    }

    [[nodiscard]] double output() const { return outer_.output(); }
    [[nodiscard]] double inner_output() const { return inner_.output(); }

    double advance(double reference)
    {
        const double y_in = inner_.output();
        if (tick_++ % ratio_ == 0)
            u_in_ = pd_.update(reference - y_in, reference);
        inner_.advance(u_in_);
        return outer_.advance(y_in);
    }

private:
    LtiStepper inner_;
    LtiStepper outer_;
    PdController pd_;
    int ratio_ = 1;
    long tick_ = 0;
    double u_in_ = 0.0;
};

inline CascadeStepper make_stepper(const CascadePlant& p, double dt) { return {p, dt}; }

/// y/r_in of the sampled inner loop (derivative on measurement) times the outer process.
inline PlantResponse plant_response(const CascadePlant& p)
{
    const auto shaping = LoopShaping::from(p.inner_cfg);
    const bool on_measurement = p.inner_cfg.derivative_on_measurement;
    return {[p, shaping, on_measurement](double w) {
                const auto g = frequency_response(p.inner.model, w);
                const auto full = shaping.controller(p.inner.gains, w);
                const auto fwd = on_measurement ? shaping.controller({p.inner.gains.kp, 0.0}, w) : full;
                return fwd * g / (1.0 + full * g) * frequency_response(p.outer, w);
            },
            p.outer.integrator_order};
}

} // namespace relaytune
