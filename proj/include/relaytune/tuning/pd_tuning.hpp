#pragma once

#include <optional>

#include "relaytune/tuning/nelder_mead.hpp"
#include "relaytune/tuning/phase_margin.hpp"

namespace relaytune {

struct TuningSpec {
    double min_phase_margin = 20.0;
    double step_amplitude = 1.0;
    int budget = 400;
    double beta_altitude = -0.72;
    double beta_lateral = -0.73;

    void validate() const
    {
        require(min_phase_margin > 0.0, "minimum phase margin must be positive");
        require(budget >= 100, "optimizer budget must be at least 100 evaluations");
        require(step_amplitude != 0.0, "step amplitude must be non-zero");
    }
};

inline LtiStepper make_stepper(const TransferFunctionModel& m, double dt) { return {m, dt}; }
inline PlantResponse plant_response(const TransferFunctionModel& m) { return PlantResponse::of(m); }

/// Step ISE of the sampled PD loop; +inf when the loop diverges.
template <class Plant>
double step_cost(const Plant& plant, PdGains gains, double amplitude, const SimulationConfig& cfg)
{
    auto stepper = make_stepper(plant, cfg.dt_sim);
    return run_pd_step(stepper, gains, amplitude, cfg, false).ise;
}

/// Gain search box anchored at the loop's reference frequency: the -180 deg crossing of
/// the uncompensated loop (-225 deg for double integrators) and the gain making |L| = 1 there.
struct GainBox {
    double kp_max = 1.0;
    double kd_max = 1.0;
    double omega_ref = 1.0;
    double gain_ref = 1.0;

    template <class Plant>
    static GainBox around(const Plant& plant, const SimulationConfig& cfg, double scale = 4.0)
    {
        const auto resp = plant_response(plant);
        const auto shaping = LoopShaping::from(cfg);
        const double target = resp.integrator_order >= 2 ? -1.25 * kPi : -kPi;
        double w = phase_crossing(resp, shaping, target);
        require(w > 0.0, "gain box: loop phase never reaches the reference crossing");
        GainBox b;
        b.omega_ref = w;
        b.gain_ref = 1.0 / std::abs(shaping.controller({1.0, 0.0}, w) * resp.response(w));
        b.kp_max = scale * b.gain_ref;
        b.kd_max = scale * b.gain_ref / w;
        return b;
    }
};

struct TuningResult {
    PdGains gains;
    double ise = kInf;
    double phase_margin = 0.0;
    int evaluations = 0;
    bool feasible = false;
};

namespace detail {

inline double penalized(double ise, double pm, double pm_min)
{
    if (!std::isfinite(ise))
        return 1e30;
    const double violation = std::max(0.0, pm_min - pm);
    return ise * (1.0 + 50.0 * violation);
}

} // namespace detail

/// ISE-optimal PD gains under a phase-margin floor.
///
/// Multi-start Nelder-Mead over the normalized gain box from five fixed seeds,
/// with an exact (linear) penalty on the margin violation, then a polish pass
/// from the best seed. The result is backed off onto the margin floor if needed
/// and, when the floor is active, refined along the boundary.
///
/// A warm start (typically the optimum of a neighbouring process) replaces the
/// seed list with that single point.
template <class Plant>
TuningResult optimize_pd(const Plant& plant, const TuningSpec& spec, const SimulationConfig& cfg,
                         std::optional<PdGains> warm_start = std::nullopt)
{
    spec.validate();
    cfg.validate();
    const GainBox box = GainBox::around(plant, cfg);
    const auto resp = plant_response(plant);
    const auto shaping = LoopShaping::from(cfg);
    int evals = 0;
    auto gains_at = [&](const std::array<double, 2>& x) { return PdGains{x[0] * box.kp_max, x[1] * box.kd_max}; };
    auto pm_at = [&](PdGains g) { return phase_margin(resp, g, shaping); };
    auto objective = [&](const std::array<double, 2>& x) {
        const PdGains g = gains_at(x);
        if (g.kp <= 0.0)
            return 1e30;
        const double pm = pm_at(g);
        ++evals;
        // deep margin violations are rejected without simulating
        if (pm < spec.min_phase_margin - 15.0)
            return 1e29 * (1.0 + spec.min_phase_margin - pm);
        return detail::penalized(step_cost(plant, g, spec.step_amplitude, cfg), pm, spec.min_phase_margin);
    };

    std::vector<std::array<double, 2>> seeds{
        {0.15, 0.10}, {0.30, 0.20}, {0.10, 0.30}, {0.40, 0.40}, {0.25, 0.05},
    };
    if (warm_start) {
        warm_start->validate();
        seeds = {{std::clamp(warm_start->kp / box.kp_max, 0.01, 1.0), std::clamp(warm_start->kd / box.kd_max, 0.0, 1.0)}};
    }
    const std::array<double, 2> lo{0.0, 0.0}, hi{1.0, 1.0};
    const int per_start = std::max(20, spec.budget / (static_cast<int>(seeds.size()) + 1));
    DirectSearchResult<2> best;
    for (const auto& s : seeds) {
        auto r = nelder_mead<2>(objective, s, warm_start ? 0.03 : 0.08, lo, hi, per_start, 1e-7);
        if (r.value < best.value)
            best = r;
    }
    const int remaining = std::max(20, spec.budget - evals);
    auto polish = nelder_mead<2>(objective, best.x, 0.01, lo, hi, remaining, 1e-9);
    if (polish.value < best.value)
        best = polish;

    // largest scale along a gain ray that keeps the margin floor
    auto back_off = [&](PdGains g) {
        if (pm_at(g) >= spec.min_phase_margin)
            return g;
        double lo_s = 0.0, hi_s = 1.0;
        for (int i = 0; i < 40; ++i) {
            const double m = 0.5 * (lo_s + hi_s);
            if (pm_at(g.scaled(m)) >= spec.min_phase_margin)
                lo_s = m;
            else
                hi_s = m;
        }
        return g.scaled(lo_s);
    };

    TuningResult out;
    out.gains = back_off(gains_at(best.x));
    out.ise = step_cost(plant, out.gains, spec.step_amplitude, cfg);

    // With an active margin constraint the optimum lies on the PM boundary; a golden
    // search over the Kd/Kp direction, each point pushed onto the boundary, refines it.
    if (pm_at(out.gains) < spec.min_phase_margin + 0.5 && out.gains.kp > 0.0) {
        auto on_boundary = [&](double angle) {
            const PdGains dir{std::cos(angle) * box.kp_max, std::sin(angle) * box.kd_max};
            double lo_s = 0.0, hi_s = 2.0;
            while (pm_at(dir.scaled(hi_s)) >= spec.min_phase_margin && hi_s < 64.0)
                hi_s *= 2.0;
            for (int i = 0; i < 30; ++i) {
                const double m = 0.5 * (lo_s + hi_s);
                if (pm_at(dir.scaled(m)) >= spec.min_phase_margin)
                    lo_s = m;
                else
                    hi_s = m;
            }
            return dir.scaled(lo_s);
        };
        auto cost = [&](double angle) {
            ++evals;
            return step_cost(plant, on_boundary(angle), spec.step_amplitude, cfg);
        };
        const double a0 = std::atan2(out.gains.kd / box.kd_max, out.gains.kp / box.kp_max);
        double a = std::max(0.0, a0 - 0.15), b = std::min(0.5 * kPi - 1e-6, a0 + 0.15);
        constexpr double g = 0.6180339887498949;
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = cost(c), fd = cost(d);
        for (int i = 0; i < 18; ++i) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = cost(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = cost(d);
            }
        }
        const double am = fc < fd ? c : d;
        const double fm = std::min(fc, fd);
        if (fm < out.ise) {
            out.gains = on_boundary(am);
            out.ise = fm;
        }
    }
    out.phase_margin = pm_at(out.gains);
    out.feasible = std::isfinite(out.ise) && out.phase_margin >= spec.min_phase_margin - 1e-9;
    out.evaluations = evals;
    require(out.feasible, "optimize_pd: untunable, no feasible PD gains found");
    return out;
}

/// Relative sensitivity J_ij in percent: ISE degradation from running C_i on G_j,
/// where C_j is optimal for G_j.
template <class Plant>
double sensitivity(PdGains ci, const Plant& gj, PdGains cj, double amplitude, const SimulationConfig& cfg,
                   double q_jj = -1.0)
{
    if (ci == cj)
        return 0.0;
    const double qij = step_cost(gj, ci, amplitude, cfg);
    if (!std::isfinite(qij))
        return kInf;
    if (q_jj < 0.0)
        q_jj = step_cost(gj, cj, amplitude, cfg);
    return (qij - q_jj) / q_jj * 100.0;
}

} // namespace relaytune
