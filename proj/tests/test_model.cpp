#include <gtest/gtest.h>

#include <random>

#include "relaytune/model/closed_loop.hpp"
#include "relaytune/tuning/pd_tuning.hpp"

using namespace relaytune;

namespace {

TimeSeries step_input(double duration, double dt, double value = 1.0)
{
    return constant_series(value, duration, dt);
}

} // namespace

TEST(TransferFunction, FirstOrderLagResponseMatchesClosedForm)
{
    const TransferFunctionModel m{2.0, {0.5}, 0.0, 0};
    for (double w : {0.1, 1.0, 2.0, 10.0}) {
        const auto g = frequency_response(m, w);
        EXPECT_NEAR(std::abs(g), 2.0 / std::sqrt(1.0 + 0.25 * w * w), 1e-12);
        EXPECT_NEAR(std::arg(g), -std::atan(0.5 * w), 1e-12);
    }
}

TEST(TransferFunction, DelayOnlyShiftsThePhase)
{
    const auto a = TransferFunctionModel::inner(1.5, 0.1, 0.4, 0.0);
    auto b = a;
    b.delay = 0.03;
    for (double w : {0.5, 3.0, 20.0}) {
        EXPECT_NEAR(std::abs(frequency_response(b, w)), std::abs(frequency_response(a, w)), 1e-12);
        EXPECT_NEAR(unwrapped_phase(b, w) - unwrapped_phase(a, w), -0.03 * w, 1e-12);
    }
}

TEST(TransferFunction, UnwrappedPhaseAgreesWithComplexArgument)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.05, 0.3, 0.01);
    for (double w : {0.2, 1.0, 4.0}) {
        const double wrapped = std::remainder(unwrapped_phase(m, w), 2.0 * kPi);
        EXPECT_NEAR(std::remainder(wrapped - std::arg(frequency_response(m, w)), 2.0 * kPi), 0.0, 1e-9);
    }
}

TEST(TransferFunction, ValidationRejectsBadParameters)
{
    EXPECT_THROW((TransferFunctionModel{-1.0, {0.1}, 0.0, 0}.validate()), Error);
    EXPECT_THROW((TransferFunctionModel{1.0, {0.0}, 0.0, 0}.validate()), Error);
    EXPECT_THROW((TransferFunctionModel{1.0, {0.1}, -0.01, 0}.validate()), Error);
    EXPECT_THROW((TransferFunctionModel{1.0, {}, 0.0, 3}.validate()), Error);
    EXPECT_THROW(frequency_response(TransferFunctionModel::inner(1, 0.1, 0.1, 0), 0.0), Error);
}

TEST(Lti, ZeroOrderHoldIsExactForFirstOrderLag)
{
    const double k = 1.7, t = 0.25, dt = 1e-3;
    const auto y = simulate_lti({k, {t}, 0.0, 0}, step_input(2.0, dt));
    for (std::size_t i = 0; i < y.size(); i += 97) {
        const double ti = static_cast<double>(i) * dt;
        EXPECT_NEAR(y[i], k * (1.0 - std::exp(-ti / t)), 1e-12) << "t=" << ti;
    }
}

TEST(Lti, IntegratorOfConstantIsRamp)
{
    const auto y = simulate_lti({3.0, {}, 0.0, 1}, step_input(1.0, 1e-3));
    for (std::size_t i = 0; i < y.size(); i += 50)
        EXPECT_NEAR(y[i], 3.0 * static_cast<double>(i) * 1e-3, 1e-12);
}

TEST(Lti, DoubleIntegratorOfConstantIsParabola)
{
    const auto y = simulate_lti({2.0, {}, 0.0, 2}, step_input(1.0, 1e-3));
    for (std::size_t i = 0; i < y.size(); i += 50) {
        const double t = static_cast<double>(i) * 1e-3;
        EXPECT_NEAR(y[i], t * t, 1e-10);
    }
}

TEST(Lti, IntegerDelayShiftsTheResponse)
{
    const double dt = 1e-3;
    const TransferFunctionModel plain{1.0, {0.1}, 0.0, 0};
    auto delayed = plain;
    delayed.delay = 0.05;
    const auto a = simulate_lti(plain, step_input(1.0, dt));
    const auto b = simulate_lti(delayed, step_input(1.0, dt));
    for (std::size_t i = 0; i < 50; ++i)
        EXPECT_EQ(b[i], 0.0);
    for (std::size_t i = 50; i < b.size(); ++i)
        EXPECT_NEAR(b[i], a[i - 50], 1e-12);
}

TEST(Lti, FractionalDelayInterpolatesBetweenNeighbours)
{
    const double dt = 1e-3;
    const TransferFunctionModel plain{1.0, {}, 0.0, 1};
    auto lo = plain, mid = plain, hi = plain;
    lo.delay = 0.010;
    mid.delay = 0.0105;
    hi.delay = 0.011;
    const auto ylo = simulate_lti(lo, step_input(0.2, dt));
    const auto ymid = simulate_lti(mid, step_input(0.2, dt));
    const auto yhi = simulate_lti(hi, step_input(0.2, dt));
    for (std::size_t i = 30; i < ymid.size(); ++i)
        EXPECT_NEAR(ymid[i], 0.5 * (ylo[i] + yhi[i]), 1e-12);
}

TEST(Lti, ResponseIsLinearInTheInput)
{
    const auto m = TransferFunctionModel::inner(1.3, 0.05, 0.3, 0.012);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> u1(800), u2(800), sum(800);
    for (std::size_t i = 0; i < 800; ++i) {
        u1[i] = n(rng);
        u2[i] = n(rng);
        sum[i] = 2.0 * u1[i] - 0.5 * u2[i];
    }
    const auto y1 = simulate_lti(m, {0.0, 1e-3, u1});
    const auto y2 = simulate_lti(m, {0.0, 1e-3, u2});
    const auto ys = simulate_lti(m, {0.0, 1e-3, sum});
    for (std::size_t i = 0; i < 800; ++i)
        EXPECT_NEAR(ys[i], 2.0 * y1[i] - 0.5 * y2[i], 1e-9);
}

TEST(Lti, RejectsHorizonShorterThanDelay)
{
    auto m = TransferFunctionModel::inner(1, 0.1, 0.1, 0.5);
    EXPECT_THROW(simulate_lti(m, step_input(0.2, 1e-3)), Error);
}

TEST(Ise, TrapezoidalIntegralOfDecayingExponential)
{
    const double dt = 1e-4;
    std::vector<double> e(100000);
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = std::exp(-static_cast<double>(i) * dt);
    EXPECT_NEAR(ise_cost({0.0, dt, e}), 0.5, 1e-6);
}

TEST(Ise, ConstantErrorGivesSquareTimesDuration)
{
    const auto e = constant_series(2.0, 3.0, 1e-3);
    const double span = static_cast<double>(e.size() - 1) * e.dt;
    EXPECT_NEAR(span, 3.0, 1.01e-3);
    EXPECT_NEAR(ise_cost(e), 4.0 * span, 1e-9);
}

TEST(ClosedLoop, GainScalingLeavesErrorUnchanged)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.05, 0.4, 0.02);
    const PdGains g{2.0, 0.5};
    SimulationConfig cfg;
    cfg.early_stop = false;
    cfg.horizon = 5.0;
    const auto a = closed_loop_step(m, g, 1.0, cfg);
    for (double c : {0.2, 3.0, 17.0}) {
        const auto b = closed_loop_step(m.with_gain(c), g.scaled(1.0 / c), 1.0, cfg);
        ASSERT_EQ(a.traces.size(), b.traces.size());
        for (std::size_t i = 0; i < a.traces.size(); i += 37)
            EXPECT_NEAR(a.traces.error[i], b.traces.error[i], 1e-9);
        EXPECT_NEAR(a.ise, b.ise, 1e-9 * a.ise);
    }
}

TEST(ClosedLoop, IseScalesWithSquareOfAmplitude)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.05, 0.4, 0.02);
    SimulationConfig cfg;
    cfg.early_stop = false;
    const double q1 = closed_loop_step(m, {2.0, 0.5}, 1.0, cfg).ise;
    const double q3 = closed_loop_step(m, {2.0, 0.5}, 3.0, cfg).ise;
    EXPECT_NEAR(q3 / q1, 9.0, 1e-8);
}

TEST(ClosedLoop, TimeScalingOfIdealLoopScalesIse)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.05, 0.4, 0.02);
    const PdGains g{2.0, 0.5};
    auto cfg = SimulationConfig::ideal(2e-4);
    cfg.early_stop = false;
    cfg.horizon = 8.0;
    const double alpha = 2.0;
    const double q = closed_loop_step(m, g, 1.0, cfg).ise;
    cfg.horizon *= alpha;
    const double qs = closed_loop_step(m.time_scaled(alpha), {g.kp / alpha, g.kd}, 1.0, cfg).ise;
    EXPECT_NEAR(qs / q, alpha, 0.01 * alpha);
}

TEST(ClosedLoop, UnstableLoopReportsInfiniteCost)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.1, 0.5, 0.05);
    SimulationConfig cfg;
    cfg.horizon = 30.0;
    const auto r = closed_loop_step(m, {200.0, 0.0}, 1.0, cfg, false);
    EXPECT_TRUE(r.unstable);
    EXPECT_EQ(r.ise, kInf);
}

TEST(ClosedLoop, EarlyStopDoesNotChangeTheCostMuch)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.05, 0.4, 0.02);
    SimulationConfig a, b;
    b.early_stop = false;
    b.horizon = a.horizon = 40.0;
    const double qa = closed_loop_step(m, {2.0, 0.5}, 1.0, a, false).ise;
    const double qb = closed_loop_step(m, {2.0, 0.5}, 1.0, b, false).ise;
    EXPECT_NEAR(qa, qb, 1e-5 * qb);
}

TEST(StepMetrics, SyntheticTrace)
{
    RunTraces tr;
    tr.dt = 0.1;
    const std::vector<double> y{0.0, 0.05, 0.2, 0.5, 0.95, 1.1, 1.05, 1.0, 1.0, 1.0};
    for (std::size_t i = 0; i < y.size(); ++i) {
        tr.t.push_back(0.1 * static_cast<double>(i));
        tr.reference.push_back(1.0);
        tr.output.push_back(y[i]);
        tr.error.push_back(1.0 - y[i]);
        tr.control.push_back(0.0);
    }
    const auto m = step_metrics(tr);
    EXPECT_NEAR(m.overshoot_percent, 10.0, 1e-9);
    EXPECT_NEAR(m.rise_time, 0.4 - 0.2, 1e-12);
    EXPECT_NEAR(m.settling_time, 0.7, 1e-12);
    EXPECT_NEAR(m.peak, 1.1, 1e-12);
}

TEST(StepMetrics, GainForRiseTimeHitsTarget)
{
    const auto m = TransferFunctionModel::inner(1.0, 0.3, 0.2, 0.0128);
    SimulationConfig cfg;
    const PdGains g{1.1766, 0.3143};
    const double k = gain_for_rise_time(m, g, 0.63, cfg);
    cfg.early_stop = false;
    const auto r = closed_loop_step(m.with_gain(k), g, 1.0, cfg);
    EXPECT_NEAR(step_metrics(r.traces).rise_time, 0.63, 2e-3);
    EXPECT_THROW(gain_for_rise_time(m, g, 1e-4, cfg), Error);
}

TEST(SimulationConfigTest, RejectsNonIntegerRatio)
{
    SimulationConfig c;
    c.dt_ctrl = 2.5e-3;
    c.dt_sim = 1e-3;
    EXPECT_THROW(c.validate(), Error);
    c.dt_sim = 5e-3;
    c.dt_ctrl = 1e-3;
    EXPECT_THROW(c.validate(), Error);
}
