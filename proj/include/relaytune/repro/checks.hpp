#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <sstream>

#include "relaytune/dnn/identify.hpp"
#include "relaytune/servo/presets.hpp"

namespace relaytune {

/// One acceptance check: what was expected, what came out, and whether it is inside tolerance.
struct CheckResult {
    int id = 0;
    std::string name;
    std::string expected;
    double computed = 0.0;
    std::string tolerance;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct ReproOptions {
    /// Grid lattice used by the grid-based checks (3, 6, 7, 9).
    GridRanges altitude = GridRanges::altitude();
    GridRanges attitude = GridRanges::attitude();
    GridOptions grid;
    TrainConfig train;
    int e2e_trials = 100;
    int tuning_classes = 10;
    int gradient_cases = 100;
    std::uint64_t seed = 1;
    std::function<void(const std::string&)> progress;

    ReproOptions() { train.epochs = 60; }
};

/// Lazily built grids shared between checks.
class ReproContext {
public:
    explicit ReproContext(ReproOptions opt = {}) : opt_(std::move(opt)) {}

    const ReproOptions& options() const { return opt_; }

    const GridBuild& altitude()
    {
        if (!altitude_)
            altitude_ = std::make_unique<GridBuild>(build(opt_.altitude));
        return *altitude_;
    }
    const GridBuild& attitude()
    {
        if (!attitude_)
            attitude_ = std::make_unique<GridBuild>(build(opt_.attitude));
        return *attitude_;
    }
    void set_altitude(GridBuild g) { altitude_ = std::make_unique<GridBuild>(std::move(g)); }
    void set_attitude(GridBuild g) { attitude_ = std::make_unique<GridBuild>(std::move(g)); }

    void log(const std::string& s) const
    {
        if (opt_.progress)
            opt_.progress(s);
    }

private:
    GridBuild build(const GridRanges& r)
    {
        log("building " + to_string(r.kind) + " grid");
        GridOptions o = opt_.grid;
        if (!o.progress)
            o.progress = opt_.progress;
        return build_grid(r, o);
    }

    ReproOptions opt_;
    std::unique_ptr<GridBuild> altitude_, attitude_;
};

inline CheckResult start_check(int id, std::string name, std::string expected, std::string tolerance)
{
    CheckResult c;
    c.id = id;
    c.name = std::move(name);
    c.expected = std::move(expected);
    c.tolerance = std::move(tolerance);
    return c;
}

namespace detail {

inline std::string fixed(double v, int digits = 3)
{
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

/// Mean interval of the last `n` rising switches.
inline double tail_period(const RelayRun& r, int n = 10)
{
    const auto s = rising_switch_times(r.trace.control_series());
    if (s.size() < static_cast<std::size_t>(n) + 1)
        return 0.0;
    return (s.back() - s[s.size() - 1 - static_cast<std::size_t>(n)]) / n;
}

} // namespace detail

/// NP-MRFT keeps the noise-free period under sinusoidal measurement noise while plain MRFT
/// switches falsely.
inline CheckResult check_noise_protection(ReproContext&)
{
    auto c = start_check(1, "noise_protection", "NP-MRFT period error <= 5%, plain MRFT false switching", "5%");
    const auto m = TransferFunctionModel::inner(1.0, kEventNoKf.t_prop, kEventNoKf.t1, kEventNoKf.tau);
    RelayTestConfig base;
    base.relay.base = {1.0, -0.72};
    base.periods = 30;
    base.horizon = 60.0;
    const RelayRun clean = run_relay_test(m, base);
    require(clean.converged(), "noise check: noise-free relay test did not converge");
    const double t0 = detail::tail_period(clean), a0 = clean.cycle->amplitude;

    RelayTestConfig noisy = base;
    noisy.noise.amplitude = 0.2 * a0;
    noisy.noise.omega = 20.0 * 2.0 * kPi / t0;
    noisy.noise.seed = 1;
    noisy.cycle.tolerance = kInf;
    noisy.relay.a_n = noisy.noise.amplitude;
    noisy.relay.tau_obs = 1.5 * t0 / 20.0;
    const RelayRun np = run_relay_test(m, noisy);
    const double np_period = detail::tail_period(np);
    noisy.noise_protected = false;
    const RelayRun plain = run_relay_test(m, noisy);

    const double np_err = np_period > 0.0 ? std::abs(np_period / t0 - 1.0) : kInf;
    const double span = plain.trace.t.empty() ? 0.0 : plain.trace.t.back();
    const double nominal_switches = 2.0 * span / t0;
    const double extra_per_period = (static_cast<double>(plain.switch_times.size()) - nominal_switches) / (span / t0);
    const double plain_period = detail::tail_period(plain);
    const double plain_err = plain_period > 0.0 ? std::abs(plain_period / t0 - 1.0) : kInf;
    const bool plain_fails = extra_per_period >= 1.0 || plain_err > 0.2;
    c.computed = np_err * 100.0;
    c.pass = np_err <= 0.05 && plain_fails;
    c.detail = "T0 clean " + detail::fixed(t0) + " s, NP-MRFT " + detail::fixed(np_period) + " s (" +
               detail::fixed(100 * (np_period / t0 - 1), 1) + "%), plain MRFT extra switches/period " +
               detail::fixed(extra_per_period, 1) + ", period error " + detail::fixed(100 * plain_err, 1) + "%";
    return c;
}

inline CheckResult check_beta_min(ReproContext&)
{
    auto c = start_check(2, "beta_min", "-0.906", "0.001");
    c.computed = beta_min(0.015, 1.0);
    c.pass = std::abs(c.computed + 0.906) <= 0.001;
    c.detail = "tau_obs / T0 = 0.015";
    return c;
}

/// Describing-function prediction against the simulated relay loop on every altitude class.
inline CheckResult check_harmonic_balance(ReproContext& ctx)
{
    auto c = start_check(3, "harmonic_balance", "period within 15%, amplitude within 20%", "15% / 20%");
    const GridBuild& g = ctx.altitude();
    RelayTestConfig rt = ctx.options().grid.relay_test;
    rt.relay.base = {1.0, -0.72};
    rt.noise = {};
    const LoopShaping shaping{rt.dt_ctrl, 0.0};
    double worst_t = 0.0, worst_a = 0.0;
    int failed = 0;
    for (const auto& cls : g.grid.classes) {
        const auto run = run_relay_test(cls.model, rt);
        if (!run.converged()) {
            ++failed;
            continue;
        }
        const auto hb = harmonic_balance_predict(cls.model, rt.relay.base, shaping);
        worst_t = std::max(worst_t, std::abs(hb.period() / run.cycle->period - 1.0));
        worst_a = std::max(worst_a, std::abs(hb.amplitude / run.cycle->amplitude - 1.0));
    }
    c.computed = worst_t * 100.0;
    c.pass = failed == 0 && worst_t <= 0.15 && worst_a <= 0.20;
    c.detail = std::to_string(g.grid.size()) + " classes, worst period error " + detail::fixed(100 * worst_t, 1) +
               "%, worst amplitude error " + detail::fixed(100 * worst_a, 1) + "%" +
               (failed ? ", " + std::to_string(failed) + " runs without a cycle" : "");
    return c;
}

inline CheckResult check_overshoot(ReproContext&)
{
    auto c = start_check(4, "overshoot", "6.32%", "1 pp");
    SimulationConfig sim;
    const auto m = identified_model(kNormalWithKf, sim);
    sim.early_stop = false;
    const auto step = closed_loop_step(m, {kNormalWithKf.kp, kNormalWithKf.kd}, 1.0, sim);
    c.computed = step_metrics(step.traces).overshoot_percent;
    c.pass = std::abs(c.computed - 6.32) <= 1.0;
    c.detail = "K_eq " + detail::fixed(m.gain) + " from rise time " + detail::fixed(kNormalWithKf.rise_time, 2) + " s";
    return c;
}

inline CheckResult check_ise_ratio(ReproContext&)
{
    auto c = start_check(5, "ise_ratio", "1.53", "15%");
    SimulationConfig sim;
    const auto mn = identified_model(kNormalNoKf, sim);
    const auto me = identified_model(kEventNoKf, sim);
    const double qn = step_cost(mn, {kNormalNoKf.kp, kNormalNoKf.kd}, 1.0, sim);
    const double qe = step_cost(me, {kEventNoKf.kp, kEventNoKf.kd}, 1.0, sim);
    const double target = 0.1629 / 0.1068;
    c.computed = qn / qe;
    c.pass = std::abs(c.computed / target - 1.0) <= 0.15;
    c.detail = "Q normal " + detail::fixed(qn, 4) + ", Q event " + detail::fixed(qe, 4) + ", target " +
               detail::fixed(target);
    return c;
}

/// optimize_pd against a 30 x 30 brute-force scan of the gain box on random altitude classes.
inline CheckResult check_tuning_optimality(ReproContext& ctx)
{
    auto c = start_check(6, "tuning_optimality", "ISE within 1% of the 30x30 scan, PM >= 20 deg", "1%");
    const GridBuild& g = ctx.altitude();
    const auto& opt = ctx.options();
    const SimulationConfig sim = opt.grid.sim;
    TuningSpec spec = opt.grid.tuning;
    spec.budget = std::max(spec.budget, 400);
    std::mt19937_64 rng(opt.seed);
    std::vector<std::size_t> idx(g.grid.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(opt.tuning_classes)));
    double worst = -kInf, min_pm = kInf;
    for (std::size_t i : idx) {
        const auto& m = g.grid.classes[i].model;
        const auto res = optimize_pd(m, spec, sim);
        const GainBox box = GainBox::around(m, sim);
        const auto resp = plant_response(m);
        const auto shaping = LoopShaping::from(sim);
        double best = kInf;
        for (int a = 1; a <= 30; ++a)
            for (int b = 0; b < 30; ++b) {
                const PdGains gg{box.kp_max * a / 30.0, box.kd_max * b / 29.0};
                if (phase_margin(resp, gg, shaping) < spec.min_phase_margin)
                    continue;
                best = std::min(best, step_cost(m, gg, spec.step_amplitude, sim));
            }
        worst = std::max(worst, (res.ise - best) / best * 100.0);
        min_pm = std::min(min_pm, res.phase_margin);
    }
    c.computed = worst;
    c.pass = worst <= 1.0 && min_pm >= spec.min_phase_margin - 1e-6;
    c.detail = std::to_string(idx.size()) + " classes, worst ISE excess over the scan " + detail::fixed(worst, 2) +
               "%, lowest phase margin " + detail::fixed(min_pm, 1) + " deg";
    return c;
}

struct EndToEndStats {
    std::vector<double> j;
    int misclassified = 0;
    double train_accuracy = 0.0;
};

/// Trains on the altitude grid, then identifies random known plants (class model with a
/// random gain, corrupted measurement) and scores the scaled gains by their step-cost loss.
inline EndToEndStats run_end_to_end(ReproContext& ctx)
{
    const GridBuild& g = ctx.altitude();
    const auto& opt = ctx.options();
    DatasetOptions d;
    d.relay = opt.grid.relay_test;
    d.sim = opt.grid.sim;
    const ReferenceRuns refs = simulate_references(g.grid, g.table, d);
    TrainConfig tc = opt.train;
    tc.rng_seed = opt.seed;
    tc.augmentation.seed = opt.seed;
    std::vector<TrainLogRow> log;
    TrainHooks hooks;
    hooks.log = &log;
    hooks.on_epoch = [&](const TrainLogRow& r) {
        if (r.epoch % 10 == 0)
            ctx.log("epoch " + std::to_string(r.epoch) + " accuracy " + detail::fixed(r.accuracy));
    };
    ctx.log("training on " + std::to_string(refs.runs.size()) + " classes");
    const Identifier id{g.grid.ranges, g.table, train_augmented(refs, g.grid, d, tc, true, hooks)};

    EndToEndStats st;
    st.train_accuracy = log.empty() ? 0.0 : log.back().accuracy;
    std::mt19937_64 rng(opt.seed * 31 + 7);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k < opt.e2e_trials; ++k) {
        const std::size_t c = rng() % g.grid.size();
        const double gain = std::exp(std::log(0.3) + u01(rng) * std::log(10.0));
        auto plant = g.grid.classes[c].model;
        plant.gain *= gain;
        IdentifyOptions io;
        io.relay = opt.grid.relay_test;
        io.sim = opt.grid.sim;
        const double a0 = g.table.entries[c].ref_amplitude * gain;
        io.sigma = tc.augmentation.sigma_max * a0 * u01(rng);
        io.bias = tc.augmentation.bias_max * a0 * (2.0 * u01(rng) - 1.0);
        io.seed = rng();
        const auto r = identify(plant, id, io);
        // the class optimum scaled by 1/gain is optimal for the plant, with the class ISE
        const double q_opt = g.table.entries[c].ise;
        const double q = step_cost(plant, r.gains, 1.0, opt.grid.sim);
        st.j.push_back(std::isfinite(q) ? (q - q_opt) / q_opt * 100.0 : kInf);
        st.misclassified += r.classification.label != c;
    }
    return st;
}

inline CheckResult check_end_to_end(ReproContext& ctx)
{
    auto c = start_check(7, "end_to_end_identification", "95th percentile J <= 10%", "10%");
    const auto st = run_end_to_end(ctx);
    c.computed = percentile(st.j, 95.0);
    c.pass = c.computed <= 10.0;
    c.detail = std::to_string(st.j.size()) + " trials, " + std::to_string(st.misclassified) +
               " misclassified, median J " + detail::fixed(percentile(st.j, 50.0), 2) + "%, final train accuracy " +
               detail::fixed(st.train_accuracy);
    return c;
}

/// Analytic modified-softmax gradient against central differences.
inline CheckResult check_gradient(ReproContext& ctx)
{
    auto c = start_check(8, "softmax_gradient", "relative error <= 1e-5", "1e-5");
    std::mt19937_64 rng(ctx.options().seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> uj(0.0, 3.0);
    double worst = 0.0;
    const int cases = ctx.options().gradient_cases;
    for (int k = 0; k < cases; ++k) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 30);
        Eigen::VectorXd a(n), j(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i) = 2.0 * n01(rng);
            j(i) = uj(rng);
        }
        const auto label = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
        j(static_cast<Eigen::Index>(label)) = k % 2 ? 0.0 : uj(rng);
        const Eigen::VectorXd g = modified_softmax_gradient(a, j, label);
        Eigen::VectorXd fd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(a(i)));
            Eigen::VectorXd ap = a, am = a;
            ap(i) += h;
            am(i) -= h;
            fd(i) = (modified_softmax_loss(ap, j, label) - modified_softmax_loss(am, j, label)) / (2.0 * h);
        }
        const double rel = (g - fd).norm() / std::max(1e-8, std::max(g.norm(), fd.norm()));
        worst = std::max(worst, rel);
    }
    c.computed = worst;
    c.pass = worst <= 1e-5;
    c.detail = std::to_string(cases) + " random cases";
    return c;
}

inline CheckResult check_grid_counts(ReproContext& ctx)
{
    auto c = start_check(9, "grid_class_counts", "altitude 208, attitude 48", "20%");
    const auto na = static_cast<double>(ctx.altitude().grid.size());
    const auto nt = static_cast<double>(ctx.attitude().grid.size());
    c.computed = na;
    c.pass = std::abs(na / 208.0 - 1.0) <= 0.2 && std::abs(nt / 48.0 - 1.0) <= 0.2;
    c.detail = "altitude " + std::to_string(static_cast<int>(na)) + " classes (" +
               std::to_string(ctx.altitude().candidates) + " candidates), attitude " +
               std::to_string(static_cast<int>(nt)) + " classes (" + std::to_string(ctx.attitude().candidates) +
               " candidates)";
    return c;
}

struct KfConsistency {
    double inside_3sigma = 0.0;
    double rms_error = 0.0;
    double rms_sigma = 0.0;
    int stationary_switches = 0;
    /// Camera frames from the first frame that sees the step to the switch; -1 if none.
    int frames_to_switch = -1;
    bool returned = false;
    double return_time = kInf;
};

inline KfConsistency kf_consistency(std::uint64_t seed)
{
    KfConsistency k;
    ServoScenario s = reference_scenario();
    s.rng_seed = seed;
    s.horizon = 20.0;
    {
        const auto tr = run_scenario(s);
        double se = 0.0, sp = 0.0;
        int in = 0, n = 0;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (tr.t[i] < 2.0)
                continue;
            const double d = tr.kf_position[i] - tr.truth[i];
            se += d * d;
            sp += tr.kf_sigma[i] * tr.kf_sigma[i];
            in += std::abs(d) <= 3.0 * tr.kf_sigma[i];
            ++n;
        }
        k.inside_3sigma = static_cast<double>(in) / n;
        k.rms_error = std::sqrt(se / n);
        k.rms_sigma = std::sqrt(sp / n);
        k.stationary_switches = static_cast<int>(tr.switch_to_camera.size());
    }
    s.horizon = 12.0;
    const double t_step = 2.0;
    s.events.targets.push_back({t_step, -1.0});
    const auto tr = run_scenario(s);
    if (!tr.switch_to_camera.empty()) {
        int frames = 0;
        for (double tf : tr.frame_t)
            if (tf - s.camera.latency >= t_step - 1e-12 && tf <= tr.switch_to_camera.front() + 1e-12)
                ++frames;
        k.frames_to_switch = frames;
    }
    k.returned = !tr.switch_to_kf.empty() && !tr.schedule.empty() && tr.schedule.back() == 1;
    if (!tr.switch_to_kf.empty())
        k.return_time = tr.switch_to_kf.front() - t_step;
    return k;
}

inline CheckResult check_kf_consistency(ReproContext& ctx)
{
    auto c = start_check(10, "kf_consistency", ">= 99% of estimates within 3 sigma; switch within 3 frames and back", "3 sigma / 3 frames");
    const auto k = kf_consistency(ctx.options().seed);
    c.computed = k.inside_3sigma;
    c.pass = k.inside_3sigma >= 0.99 && k.rms_error <= 1.5 * k.rms_sigma && k.stationary_switches == 0 &&
             k.frames_to_switch >= 1 && k.frames_to_switch <= 3 && k.returned;
    c.detail = "inside 3 sigma " + detail::fixed(100 * k.inside_3sigma, 2) + "%, rms error " +
               detail::fixed(1000 * k.rms_error, 2) + " mm vs filter sigma " + detail::fixed(1000 * k.rms_sigma, 2) +
               " mm, target step: switch after " + std::to_string(k.frames_to_switch) + " frames, back " +
               (k.returned ? "after " + detail::fixed(k.return_time, 2) + " s" : "never");
    return c;
}

struct DisturbanceOutcome {
    double wind_force = 0.0;
    double wind_max_deviation = 0.0;
    double wind_offset = 0.0;
    bool wind_diverged = false;
    double pull_max_deviation = 0.0;
    double pull_tail_deviation = 0.0;
    bool pull_diverged = false;
};

inline DisturbanceOutcome disturbance_suite(std::uint64_t seed)
{
    DisturbanceOutcome o;
    ServoScenario s = reference_scenario();
    s.rng_seed = seed;
    s.horizon = 15.0;
    o.wind_force = calibrate_wind_force(s, 2.0, 0.18);
    {
        ServoScenario w = s;
        w.events.forces.push_back({2.0, o.wind_force});
        const auto tr = run_scenario(w);
        const auto m = servo_metrics(tr, 2.0);
        o.wind_diverged = tr.diverged;
        o.wind_max_deviation = m.max_deviation;
        o.wind_offset = servo_metrics(tr, 10.0).steady_offset;
    }
    {
        ServoScenario p = s;
        p.events.pulls.push_back({2.0, 3.0, 10.0});
        const auto tr = run_scenario(p);
        o.pull_diverged = tr.diverged;
        o.pull_max_deviation = servo_metrics(tr, 2.0).max_deviation;
        o.pull_tail_deviation = servo_metrics(tr, 12.0).max_deviation;
    }
    return o;
}

inline CheckResult check_disturbances(ReproContext& ctx)
{
    auto c = start_check(11, "disturbance_rejection", "wind: bounded nonzero offset; pull-release: back in hover band", "offset >= 2 cm, deviation <= 0.25 m; hover band 5 cm");
    const auto o = disturbance_suite(ctx.options().seed);
    const bool wind_ok = !o.wind_diverged && std::abs(o.wind_offset) >= 0.02 && o.wind_max_deviation <= 0.25;
    const bool pull_ok = !o.pull_diverged && o.pull_tail_deviation <= 0.05;
    c.computed = std::abs(o.wind_offset);
    c.pass = wind_ok && pull_ok;
    c.detail = "wind " + detail::fixed(o.wind_force, 2) + " N: max deviation " + detail::fixed(o.wind_max_deviation) +
               " m, steady offset " + detail::fixed(o.wind_offset) + " m; pull to 10 N: max deviation " +
               detail::fixed(o.pull_max_deviation) + " m, after release " + detail::fixed(o.pull_tail_deviation) + " m";
    return c;
}

using CheckFn = CheckResult (*)(ReproContext&);

inline const std::vector<std::pair<int, CheckFn>>& all_checks()
{
    static const std::vector<std::pair<int, CheckFn>> checks{
        {1, check_noise_protection}, {2, check_beta_min},         {3, check_harmonic_balance},
        {4, check_overshoot},        {5, check_ise_ratio},        {6, check_tuning_optimality},
        {7, check_end_to_end},       {8, check_gradient},         {9, check_grid_counts},
        {10, check_kf_consistency},  {11, check_disturbances},
    };
    return checks;
}

/// Runs one check; an exception becomes a failed result carrying the message.
inline CheckResult run_check(int id, ReproContext& ctx)
{
    for (const auto& [i, fn] : all_checks())
        if (i == id) {
            const auto t0 = std::chrono::steady_clock::now();
            CheckResult r;
            try {
                r = fn(ctx);
            } catch (const std::exception& e) {
                r.id = id;
                r.name = "check " + std::to_string(id);
                r.pass = false;
                r.detail = std::string("error: ") + e.what();
            }
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return r;
        }
    throw Error("unknown check " + std::to_string(id));
}

} // namespace relaytune
