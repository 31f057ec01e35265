#pragma once

#include <functional>
#include <optional>

#include "relaytune/relay/relay_test.hpp"
#include "relaytune/tuning/cascade.hpp"
#include "relaytune/tuning/pd_tuning.hpp"

namespace relaytune {

enum class LoopKind { Attitude, Altitude, Lateral };

inline std::string to_string(LoopKind k)
{
    switch (k) {
    case LoopKind::Attitude:
        return "attitude";
    case LoopKind::Altitude:
        return "altitude";
    case LoopKind::Lateral:
        return "lateral";
    }
    return "?";
}

inline LoopKind loop_kind_from_string(const std::string& s)
{
    if (s == "attitude")
        return LoopKind::Attitude;
    if (s == "altitude")
        return LoopKind::Altitude;
    if (s == "lateral")
        return LoopKind::Lateral;
    throw Error("unknown loop kind '" + s + "' (expected attitude, altitude or lateral)");
}

/// One lattice axis: `points` values log-spaced in (x + offset) over [lo, hi].
struct AxisRange {
    double lo = 0.0;
    double hi = 0.0;
    int points = 1;
    double offset = 0.0;

    void validate(const std::string& name) const
    {
        require(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && hi >= lo,
                "range " + name + ": need 0 < lo <= hi");
        require(points >= 1, "range " + name + ": need at least one lattice point");
        require(points == 1 || hi > lo, "range " + name + ": empty range with several points");
        require(offset >= 0.0, "range " + name + ": offset must be non-negative");
    }

    [[nodiscard]] std::vector<double> lattice() const
    {
        if (points == 1)
            return {std::sqrt(lo * hi)};
        std::vector<double> v(static_cast<std::size_t>(points));
        const double a = lo + offset, b = hi + offset;
        for (int i = 0; i < points; ++i)
            v[static_cast<std::size_t>(i)] = a * std::pow(b / a, static_cast<double>(i) / (points - 1)) - offset;
        v.front() = lo;
        v.back() = hi;
        return v;
    }
};

/// Parameter box of one loop. Inner loops (attitude, altitude) span (T_prop, T_1, tau);
/// the lateral loop spans (T_2, tau_out) around a fixed tuned inner loop.
struct GridRanges {
    LoopKind kind = LoopKind::Altitude;
    AxisRange t_prop{0.015, 0.3, 8};
    AxisRange t1{0.2, 2.0, 8};
    AxisRange tau{0.0005, 0.06, 10, 0.01};
    AxisRange t2{0.2, 6.0, 10};
    std::optional<InnerLoop> inner;

    static GridRanges attitude()
    {
        GridRanges r;
        r.kind = LoopKind::Attitude;
        r.tau = {0.0005, 0.03, 10, 0.01};
        return r;
    }
    static GridRanges altitude() { return {}; }
    static GridRanges lateral(InnerLoop inner)
    {
        GridRanges r;
        r.kind = LoopKind::Lateral;
        r.tau = {0.0005, 0.15, 10, 0.01};
        r.inner = std::move(inner);
        return r;
    }

    void validate() const
    {
        tau.validate("tau");
        if (kind == LoopKind::Lateral) {
            t2.validate("T_2");
            require(inner.has_value(), "lateral grid needs the tuned inner loop");
            inner->model.validate();
            inner->gains.validate();
        } else {
            t_prop.validate("T_prop");
            t1.validate("T_1");
        }
    }
};

/// A grid class: its parameters and the gain-normalized model (reference relay cycle with
/// unit first-harmonic amplitude per unit relay amplitude).
struct ProcessClass {
    std::vector<double> params;
    TransferFunctionModel model;
    double time_scale = 1.0;
};

struct ProcessGrid {
    LoopKind kind = LoopKind::Altitude;
    GridRanges ranges;
    double target_j = 10.0;
    std::vector<ProcessClass> classes;
    /// Symmetrized relative sensitivity J_(ij) in percent; +inf for destabilizing pairs.
    std::vector<std::vector<double>> j;

    [[nodiscard]] std::size_t size() const { return classes.size(); }
};

struct ControllerEntry {
    PdGains gains;
    double ise = 0.0;
    double phase_margin = 0.0;
    double ref_amplitude = 0.0;
    double ref_period = 0.0;
    double ref_bias = 0.0;
    /// First-harmonic amplitude of the reference cycle; the gain ratio is taken against it.
    double ref_harmonic = 0.0;
};

struct ControllerTable {
    MrftConfig relay;
    std::vector<ControllerEntry> entries;
};

struct GridOptions {
    double target_j = 10.0;
    TuningSpec tuning;
    SimulationConfig sim;
    RelayTestConfig relay_test;
    std::function<void(const std::string&)> progress;

    GridOptions()
    {
        tuning.budget = 150;
        relay_test.periods = 10;
    }
};

struct GridBuild {
    ProcessGrid grid;
    ControllerTable table;
    int candidates = 0;
};

inline TransferFunctionModel class_model(const GridRanges& r, const std::vector<double>& p)
{
    if (r.kind == LoopKind::Lateral)
        return {1.0, {p[0]}, p[1], 1};
    return TransferFunctionModel::inner(1.0, p[0], p[1], p[2]);
}

namespace detail {

template <class F>
auto with_plant(const GridRanges& r, const SimulationConfig& sim, const TransferFunctionModel& m, F&& f)
{
    if (r.kind == LoopKind::Lateral)
        return f(CascadePlant{*r.inner, m, sim});
    return f(m);
}

inline double log_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = std::log(a[i] / b[i]);
        d += x * x;
    }
    return d;
}

} // namespace detail

/// Step ISE of controller `g` on class model `m` of the given loop.
inline double loop_cost(const GridRanges& r, const SimulationConfig& sim, const TransferFunctionModel& m, PdGains g,
                        double amplitude = 1.0)
{
    return detail::with_plant(r, sim, m, [&](const auto& plant) { return step_cost(plant, g, amplitude, sim); });
}

inline TuningResult loop_tune(const GridRanges& r, const SimulationConfig& sim, const TransferFunctionModel& m,
                              const TuningSpec& spec, std::optional<PdGains> warm = std::nullopt)
{
    return detail::with_plant(r, sim, m, [&](const auto& plant) { return optimize_pd(plant, spec, sim, warm); });
}

inline RelayRun loop_relay(const GridRanges& r, const SimulationConfig& sim, const TransferFunctionModel& m,
                           const RelayTestConfig& cfg)
{
    return detail::with_plant(r, sim, m, [&](const auto& plant) {
        auto stepper = make_stepper(plant, cfg.dt_sim);
        return run_relay_loop(stepper, cfg);
    });
}

/// Symmetrized sensitivity between two tuned classes; +inf when either controller destabilizes.
inline double pair_sensitivity(const GridRanges& r, const SimulationConfig& sim, const TransferFunctionModel& mi,
                               const ControllerEntry& ci, const TransferFunctionModel& mj, const ControllerEntry& cj)
{
    const double qij = loop_cost(r, sim, mj, ci.gains);
    const double qji = loop_cost(r, sim, mi, cj.gains);
    const double jij = (qij - cj.ise) / cj.ise * 100.0;
    const double jji = (qji - ci.ise) / ci.ise * 100.0;
    if (!std::isfinite(jij) || !std::isfinite(jji))
        return kInf;
    return std::max({jij, jji, 0.0});
}

/// J-driven discretization of a loop's parameter box.
///
/// Classes are compared after gain normalization by their own relay cycle, which is the
/// normalization identification applies when it rescales the looked-up gains.
/// Lattice points are visited in lexicographic order; a point becomes a class when its
/// symmetrized J to every class accepted so far exceeds `target_j`. Existing classes are
/// checked nearest-first so rejections are usually cheap. Each class stores its optimal PD
/// gains and the reference MRFT oscillation under the configured (h, beta).
inline GridBuild build_grid(const GridRanges& ranges, const GridOptions& opt)
{
    ranges.validate();
    require(opt.target_j > 0.0, "build_grid: target J must be positive");
    opt.sim.validate();

    std::vector<std::vector<double>> axes;
    if (ranges.kind == LoopKind::Lateral)
        axes = {ranges.t2.lattice(), ranges.tau.lattice()};
    else
        axes = {ranges.t_prop.lattice(), ranges.t1.lattice(), ranges.tau.lattice()};
    require(!axes.empty(), "build_grid: empty ranges");
    std::vector<std::vector<double>> lattice{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : lattice)
            for (double v : axis) {
                auto p = prefix;
                p.push_back(v);
                next.push_back(std::move(p));
            }
        lattice = std::move(next);
    }

    GridBuild out;
    out.grid.kind = ranges.kind;
    out.grid.ranges = ranges;
    out.grid.target_j = opt.target_j;
    out.table.relay = opt.relay_test.relay.base;
    auto& classes = out.grid.classes;
    auto& entries = out.table.entries;

    RelayTestConfig rt = opt.relay_test;
    rt.noise = {};
    for (const auto& p : lattice) {
        ++out.candidates;
        auto m = class_model(ranges, p);
        // the reference relay test fixes the class gain: a_1 = 1 under the configured relay
        const RelayRun run = loop_relay(ranges, opt.sim, m, rt);
        if (!run.converged()) {
            if (opt.progress)
                opt.progress("skipping candidate without a limit cycle: " + m.describe() + " (" + run.diagnostic + ")");
            continue;
        }
        const double k = rt.relay.base.h / run.cycle->harmonic_amplitude;
        m.gain *= k;

        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < classes.size(); ++i)
            order.emplace_back(detail::log_distance(p, classes[i].params), i);
        std::sort(order.begin(), order.end());

        TuningResult tuned;
        try {
            tuned = order.empty() ? loop_tune(ranges, opt.sim, m, opt.tuning)
                                  : loop_tune(ranges, opt.sim, m, opt.tuning, entries[order.front().second].gains);
        } catch (const Error&) {
            if (opt.progress)
                opt.progress("skipping untunable candidate " + m.describe());
            continue;
        }
        ControllerEntry cand{tuned.gains, tuned.ise, tuned.phase_margin};
        auto separated = [&] {
            for (const auto& [d, i] : order)
                if (pair_sensitivity(ranges, opt.sim, m, cand, classes[i].model, entries[i]) <= opt.target_j)
                    return false;
            return true;
        };
        if (!separated())
            continue;

        // a cold start on accepted classes guards against a warm start stuck in a worse basin
        if (!order.empty()) {
            try {
                const auto cold = loop_tune(ranges, opt.sim, m, opt.tuning);
                if (cold.ise < cand.ise) {
                    cand = {cold.gains, cold.ise, cold.phase_margin};
                    if (!separated())
                        continue;
                }
            } catch (const Error&) {
            }
        }
        // the loop is linear, so the reference cycle scales with the gain
        cand.ref_amplitude = run.cycle->amplitude * k;
        cand.ref_period = run.cycle->period;
        cand.ref_bias = run.cycle->bias * k;
        cand.ref_harmonic = run.cycle->harmonic_amplitude * k;
        classes.push_back({p, m, 1.0});
        entries.push_back(cand);
        if (opt.progress)
            opt.progress("class " + std::to_string(classes.size()) + " after " + std::to_string(out.candidates) +
                         " candidates: " + m.describe());
    }
    require(!classes.empty(), "build_grid: no class could be tuned");

    const std::size_t n = classes.size();
    out.grid.j.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k) {
            const double v = pair_sensitivity(ranges, opt.sim, classes[i].model, entries[i], classes[k].model, entries[k]);
            out.grid.j[i][k] = out.grid.j[k][i] = v;
            require(v > opt.target_j, "build_grid: class pair below the target J");
        }
    return out;
}

} // namespace relaytune
