#include <gtest/gtest.h>

#include <random>

#include "relaytune/relay/relay_test.hpp"

using namespace relaytune;

namespace {

/// Open-loop drive of a relay law with e = A sin(w t).
template <class Step>
std::vector<double> drive(Step step, double a, double w, double dt, double duration, std::vector<double>* e_out = nullptr)
{
    RelayState s = RelayState::initial();
    std::vector<double> u;
    for (double t = 0.0; t < duration; t += dt) {
        const double e = a * std::sin(w * t);
        u.push_back(step(s, e, t));
        if (e_out)
            e_out->push_back(e);
    }
    return u;
}

std::complex<double> fundamental(const std::vector<double>& x, double w, double dt, std::size_t from)
{
    std::complex<double> c{0.0, 0.0};
    for (std::size_t i = from; i < x.size(); ++i)
        c += x[i] * std::polar(1.0, -w * static_cast<double>(i) * dt);
    return c;
}

double tail_period(const RelayRun& r, int n = 8)
{
    const auto s = rising_switch_times(r.trace.control_series());
    if (s.size() < static_cast<std::size_t>(n) + 1)
        return 0.0;
    return (s.back() - s[s.size() - 1 - static_cast<std::size_t>(n)]) / n;
}

} // namespace

TEST(BetaMin, MatchesWindowRatio)
{
    EXPECT_NEAR(beta_min(0.015, 1.0), -0.906, 1e-3);
    EXPECT_NEAR(beta_min(0.03, 2.0), beta_min(0.015, 1.0), 1e-15);
    EXPECT_THROW(beta_min(0.0, 1.0), Error);
    EXPECT_THROW(beta_min(0.3, 1.0), Error);
}

TEST(BetaMin, IncreasesWithObservationWindow)
{
    double prev = -1.0;
    for (double r = 0.01; r < 0.25; r += 0.02) {
        const double b = beta_min(r, 1.0);
        EXPECT_GT(b, prev);
        prev = b;
    }
}

TEST(Mrft, SwitchesAtBetaFractionOfThePeak)
{
    const double a = 2.0, w = 2.0 * kPi, dt = 1e-4, beta = -0.72;
    std::vector<double> e;
    const auto u = drive([&](RelayState& s, double x, double t) { return mrft_step(s, x, t, {1.0, beta}); }, a, w, dt,
                         5.0, &e);
    int checked = 0;
    for (std::size_t i = 10000; i < u.size(); ++i) {
        if (u[i] < u[i - 1]) {
            EXPECT_NEAR(e[i], -beta * a, 2e-3);
            ++checked;
        }
        if (u[i] > u[i - 1]) {
            EXPECT_NEAR(e[i], beta * a, 2e-3);
            ++checked;
        }
    }
    EXPECT_GE(checked, 7);
}

TEST(Mrft, DescribingFunctionPhaseAndGain)
{
    const double a = 1.5, h = 0.7, w = 2.0 * kPi, dt = 1e-4;
    for (double beta : {-0.72, -0.3, 0.2}) {
        std::vector<double> e;
        const auto u =
            drive([&](RelayState& s, double x, double t) { return mrft_step(s, x, t, {h, beta}); }, a, w, dt, 6.0, &e);
        const auto from = static_cast<std::size_t>(1.0 / dt);
        const auto n = fundamental(u, w, dt, from) / fundamental(e, w, dt, from);
        EXPECT_NEAR(std::arg(n), -std::asin(beta), 2e-3) << "beta " << beta;
        EXPECT_NEAR(std::abs(n), 4.0 * h / (kPi * a), 2e-3) << "beta " << beta;
    }
}

TEST(Mrft, RejectsBadConfig)
{
    RelayState s;
    EXPECT_THROW((MrftConfig{0.0, -0.5}.validate()), Error);
    EXPECT_THROW((MrftConfig{1.0, -1.0}.validate()), Error);
    EXPECT_THROW(mrft_step(s, std::nan(""), 0.0, {}), Error);
}

TEST(NpMrft, NoiseFreeMatchesPlainMrftWhenWindowIsZero)
{
    const double w = 3.0, dt = 1e-3;
    const auto a = drive([&](RelayState& s, double x, double t) { return mrft_step(s, x, t, {1.0, -0.5}); }, 1.0, w, dt, 8.0);
    const auto b = drive([&](RelayState& s, double x, double t) { return np_mrft_step(s, x, t, {{1.0, -0.5}, 0.0, 0.0}); },
                         1.0, w, dt, 8.0);
    EXPECT_EQ(a, b);
}

TEST(NpMrft, NoSwitchWhileInhibited)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.05, 0.4, 0.02);
    RelayTestConfig cfg;
    cfg.relay = {{1.0, -0.72}, 0.02, 0.0};
    cfg.noise = {0.005, 2 * kPi * 40.0};
    cfg.relay.a_n = 0.005;
    cfg.cycle.tolerance = kInf;
    const auto run = run_relay_test(m, cfg);
    ASSERT_FALSE(run.switch_times.empty());
    for (std::size_t i = 1; i < run.trace.size(); ++i) {
        if (run.trace.control[i] != run.trace.control[i - 1]) {
            EXPECT_FALSE(run.trace.inhibited[i - 1]) << "switch at " << run.trace.t[i];
        }
    }
    EXPECT_FALSE(run.inhibition_windows().empty());
}

TEST(NpMrft, SuppressesFalseSwitchingAcrossSeedsAndPhases)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.0135, 1.6834, 0.0237);
    RelayTestConfig base;
    base.relay.base = {1.0, -0.72};
    base.periods = 20;
    const auto clean = run_relay_test(m, base);
    ASSERT_TRUE(clean.converged());
    const double t0 = clean.cycle->period, a0 = clean.cycle->amplitude;
    for (double phase : {0.0, 1.0, 2.5, 4.0}) {
        RelayTestConfig n = base;
        n.noise = {0.2 * a0, 20.0 * 2.0 * kPi / t0, phase};
        n.relay.a_n = 0.2 * a0;
        n.relay.tau_obs = 1.5 * t0 / 20.0;
        n.cycle.tolerance = kInf;
        n.horizon = 20.0;
        const auto np = run_relay_test(m, n);
        const double span = np.trace.t.back();
        const double np_period = tail_period(np);
        ASSERT_GT(np_period, 0.0);
        // exactly two switches per oscillation period
        EXPECT_NEAR(static_cast<double>(np.switch_times.size()) * np_period / span, 2.0, 0.3) << "phase " << phase;
        EXPECT_GT(np_period, 0.9 * t0);

        n.noise_protected = false;
        const auto plain = run_relay_test(m, n);
        const double switches_per_period = static_cast<double>(plain.switch_times.size()) * t0 / plain.trace.t.back();
        EXPECT_GT(switches_per_period, 4.0) << "phase " << phase;
    }
}

TEST(NpMrft, PlainMrftKeepsSwitchingUnderNoise)
{
    // the extremum tracker must start from the switching sample so the relay re-arms
    const auto m = TransferFunctionModel::inner(1.0, 0.0135, 1.6834, 0.0237);
    RelayTestConfig n;
    n.noise_protected = false;
    n.noise = {4e-4, 2 * kPi * 60.0};
    n.horizon = 5.0;
    n.periods = 1000;
    n.cycle.tolerance = kInf;
    const auto r = run_relay_test(m, n);
    ASSERT_FALSE(r.switch_times.empty());
    EXPECT_GT(r.switch_times.back(), 4.5);
    double worst = 0.0;
    for (double e : r.trace.error)
        worst = std::max(worst, std::abs(e));
    EXPECT_LT(worst, 0.1);
}

TEST(NoiseEstimate, SinusoidAmplitudeAndPeriod)
{
    const double dt = 1e-3;
    std::vector<double> e(5000);
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double t = static_cast<double>(i) * dt;
        e[i] = 0.5 * std::sin(2 * kPi * 0.5 * t) + 0.02 * std::sin(2 * kPi * 50.0 * t + 0.3);
    }
    const auto est = estimate_noise({0.0, dt, e}, 10.0);
    ASSERT_TRUE(est.period_defined);
    EXPECT_NEAR(est.a_n, 0.02, 0.002);
    EXPECT_NEAR(est.t_n, 0.02, 0.001);
}

TEST(NoiseEstimate, GaussianNoiseBoundedByTwoAndFourSigma)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 0.01);
    std::vector<double> e(20000);
    for (auto& v : e)
        v = n(rng);
    const auto est = estimate_noise({0.0, 1e-3, e}, 50.0);
    EXPECT_GT(est.a_n, 0.02);
    EXPECT_LT(est.a_n, 0.04);
}

TEST(NoiseEstimate, CleanSignalHasNoNoise)
{
    std::vector<double> e(4000);
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = std::sin(2 * kPi * 0.5 * static_cast<double>(i) * 1e-3);
    EXPECT_LT(estimate_noise({0.0, 1e-3, e}, 20.0).a_n, 1e-3);
}

TEST(LimitCycle, DetectsPeriodAmplitudeAndBias)
{
    const double dt = 1e-3, t0 = 0.5;
    std::vector<double> e, u;
    for (double t = 0.0; t < 6.0; t += dt) {
        const double ph = std::fmod(t, t0) / t0;
        u.push_back(ph < 0.5 ? 1.0 : -1.0);
        e.push_back(0.1 + 0.3 * std::sin(2 * kPi * t / t0));
    }
    const auto lc = detect_limit_cycle({0.0, dt, e}, {0.0, dt, u});
    EXPECT_NEAR(lc.period, t0, 2 * dt);
    EXPECT_NEAR(lc.amplitude, 0.3, 1e-3);
    EXPECT_NEAR(lc.harmonic_amplitude, 0.3, 2e-3);
    EXPECT_NEAR(lc.bias, 0.1, 2e-3);
    EXPECT_EQ(lc.error_wave.size(), kWaveformSamples);
}

TEST(LimitCycle, TooFewPeriodsIsNotConverged)
{
    std::vector<double> e(500, 0.0), u(500, 1.0);
    u[200] = -1.0;
    EXPECT_THROW(detect_limit_cycle({0.0, 1e-3, e}, {0.0, 1e-3, u}), Error);
}

TEST(LimitCycle, DriftingAmplitudeIsNotConverged)
{
    const double dt = 1e-3, t0 = 0.5;
    std::vector<double> e, u;
    for (double t = 0.0; t < 6.0; t += dt) {
        u.push_back(std::fmod(t, t0) / t0 < 0.5 ? 1.0 : -1.0);
        e.push_back((0.2 + 0.2 * t) * std::sin(2 * kPi * t / t0));
    }
    EXPECT_THROW(detect_limit_cycle({0.0, dt, e}, {0.0, dt, u}), Error);
}

TEST(HarmonicBalance, PredictsSimulatedCycleOfSlowProcess)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.2, 1.0, 0.05);
    RelayTestConfig cfg;
    cfg.dt_sim = cfg.dt_ctrl = 2e-4;
    cfg.relay.base = {1.0, -0.72};
    const auto run = run_relay_test(m, cfg);
    ASSERT_TRUE(run.converged()) << run.diagnostic;
    const auto hb = harmonic_balance_predict(m, cfg.relay.base, LoopShaping{cfg.dt_ctrl, 0.0});
    EXPECT_NEAR(hb.period() / run.cycle->period, 1.0, 0.05);
    EXPECT_NEAR(hb.amplitude / run.cycle->amplitude, 1.0, 0.15);
}

TEST(HarmonicBalance, PhaseConditionHolds)
{
    const auto m = TransferFunctionModel::inner(2.0, 0.1, 0.5, 0.02);
    for (double beta : {-0.8, -0.5, 0.0, 0.3}) {
        const auto hb = harmonic_balance_predict(m, {1.0, beta});
        EXPECT_NEAR(unwrapped_phase(m, hb.omega), -kPi + std::asin(beta), 1e-6);
        EXPECT_NEAR(hb.amplitude, 4.0 / kPi * std::abs(frequency_response(m, hb.omega)), 1e-9);
    }
}

TEST(HarmonicBalance, AmplitudeScalesWithRelayAndProcessGain)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.1, 0.5, 0.02);
    const auto a = harmonic_balance_predict(m, {1.0, -0.72});
    const auto b = harmonic_balance_predict(m.with_gain(3.0), {2.0, -0.72});
    EXPECT_NEAR(b.omega, a.omega, 1e-9);
    EXPECT_NEAR(b.amplitude, 6.0 * a.amplitude, 1e-9);
}

TEST(RelayTest, OnlineNoiseEstimationFindsInjectedAmplitude)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.05, 0.5, 0.02);
    RelayTestConfig clean_cfg;
    const auto clean = run_relay_test(m, clean_cfg);
    ASSERT_TRUE(clean.converged());
    RelayTestConfig cfg;
    cfg.estimate_noise_online = true;
    cfg.relay.tau_obs = 0.02;
    cfg.relay.a_n = 0.1 * clean.cycle->amplitude;
    cfg.noise = {0.1 * clean.cycle->amplitude, 2 * kPi * 30.0};
    cfg.cycle.tolerance = kInf;
    const auto run = run_relay_test(m, cfg);
    EXPECT_NEAR(run.a_n_used, cfg.noise.amplitude, 0.3 * cfg.noise.amplitude);
}

TEST(RelayTest, RejectsBadTimeSteps)
{
    RelayTestConfig cfg;
    cfg.dt_ctrl = 2.5e-3;
    EXPECT_THROW(cfg.validate(), Error);
}
