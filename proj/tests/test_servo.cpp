#include <gtest/gtest.h>

#include <random>

#include "relaytune/servo/frames.hpp"
#include "relaytune/servo/presets.hpp"

using namespace relaytune;

namespace {

Eigen::Matrix3d rot_z(double a)
{
    return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

Eigen::Matrix3d rot_y(double a)
{
    return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

TimeSeries ramp(double duration, double dt)
{
    TimeSeries s{0.0, dt, {}};
    for (double t = 0.0; t <= duration + 1e-12; t += dt)
        s.values.push_back(t);
    return s;
}

} // namespace

TEST(Frames, InverseComposesToIdentity)
{
    const FrameTransform t(rot_z(0.4) * rot_y(-0.2), {0.1, -2.0, 0.5});
    EXPECT_TRUE((t * t.inverse()).matrix().isApprox(Eigen::Matrix4d::Identity(), 1e-12));
    const Eigen::Vector3d p(0.3, 0.2, -1.0);
    EXPECT_TRUE(t.inverse().apply(t.apply(p)).isApprox(p, 1e-12));
}

TEST(Frames, RejectsInvalidMatrices)
{
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m(0, 0) = 2.0;
    EXPECT_THROW(FrameTransform{m}, Error);
    m = Eigen::Matrix4d::Identity();
    m(0, 0) = -1.0;
    EXPECT_THROW(FrameTransform{m}, Error);
    m = Eigen::Matrix4d::Identity();
    m(3, 0) = 0.1;
    EXPECT_THROW(FrameTransform{m}, Error);
}

TEST(Frames, ProjectionRoundTrips)
{
    const CameraIntrinsics intr{320.0, 240.0, 600.0, 1.1};
    const Eigen::Vector3d c(2.5, 0.4, -0.3);
    const auto p = project(intr, c);
    EXPECT_TRUE(back_project(p, c.x()).isApprox(c, 1e-12));
    const auto px = to_pixels(intr, p);
    const auto q = from_pixels(intr, px);
    EXPECT_NEAR(q.py, p.py, 1e-12);
    EXPECT_NEAR(q.pz, p.pz, 1e-12);
    EXPECT_THROW(project(intr, {-1.0, 0.0, 0.0}), Error);
}

TEST(Frames, ServoErrorVanishesAtTheReferencePoint)
{
    const FrameTransform t_sb(rot_z(0.3), {0.0, 0.0, 0.0});
    const FrameTransform t_bc(rot_y(0.1), {0.0, 0.0, 0.0});
    const Eigen::Vector3d c(3.0, 0.2, 0.5);
    const Eigen::Vector3d r = (t_sb * t_bc).apply(c);
    const auto e = to_servo_error(project(CameraIntrinsics{}, c), c.x(), t_sb, t_bc, r);
    EXPECT_LT(e.norm(), 1e-12);
}

TEST(Frames, TranslationScalesWithDepth)
{
    const FrameTransform none;
    const auto t = FrameTransform::translation({0.0, 0.0, 0.2});
    const ImagePoint p{0.1, -0.05};
    for (double d : {1.0, 2.0, 4.0}) {
        const auto a = to_servo_error(p, d, none, none, Eigen::Vector3d::Zero());
        const auto b = to_servo_error(p, d, t, none, Eigen::Vector3d::Zero());
        EXPECT_NEAR((a - b).z(), 0.2 * d, 1e-12);
    }
    EXPECT_THROW(to_servo_error(p, 0.0, none, none, Eigen::Vector3d::Zero()), Error);
}

TEST(Kalman, TransitionMatchesTheRecursion)
{
    KfState s;
    s.x = {1.0, 0.5, 0.2};
    const double dt = s.dt, u = 1.5;
    const auto n = kf_predict(s, u);
    EXPECT_NEAR(n.x(0), 1.0 + dt * 0.5 - dt * dt * 0.2 + dt * dt * u, 1e-15);
    EXPECT_NEAR(n.x(1), 0.5 - dt * 0.2 + dt * u, 1e-15);
    EXPECT_NEAR(n.x(2), 0.2, 1e-15);
}

TEST(Kalman, CovarianceStaysSymmetricPositive)
{
    KfState s;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 5000; ++k) {
        s = kf_predict(s, n(rng));
        if (k % 3 == 0)
            s = kf_update(s, 0.01 * n(rng)).state;
        ASSERT_LT((s.p - s.p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        ASSERT_GT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(s.p).eigenvalues().minCoeff(), -1e-12);
    }
}

TEST(Kalman, EstimatesAConstantAccelerometerBias)
{
    // hovering platform: true acceleration 0, the accelerometer reads the bias
    KfState s;
    s.sigma_bias = 1e-2;
    const double bias = 0.3;
    for (int k = 0; k < 20000; ++k) {
        s = kf_predict(s, bias);
        if (k % 3 == 0)
            s = kf_update(s, 0.0).state;
    }
    EXPECT_NEAR(s.x(2), bias, 1e-3);
    EXPECT_NEAR(s.x(0), 0.0, 1e-4);
}

TEST(Kalman, InnovationVarianceIncludesCameraNoise)
{
    KfState s;
    const auto u = kf_update(s, 0.1, 0.02);
    EXPECT_NEAR(u.innovation, 0.1, 1e-15);
    EXPECT_NEAR(u.innovation_variance, s.p(0, 0) + 4e-4, 1e-15);
    EXPECT_LT(u.state.p(0, 0), s.p(0, 0));
    EXPECT_THROW(kf_update(s, std::nan(""), 0.02), Error);
    EXPECT_THROW(kf_update(s, 0.0, 0.0), Error);
}

TEST(Sensors, FrameRatesOfTheCameras)
{
    const auto truth = ramp(3.0, 1e-3);
    const auto normal = emulate_sensor(truth, SensorProfile::normal(), 1);
    const auto event = emulate_sensor(truth, SensorProfile::event(), 1);
    EXPECT_EQ(normal.size(), 181u);
    EXPECT_EQ(event.size(), 301u);
    EXPECT_NEAR(static_cast<double>(event.size() - 1) / static_cast<double>(normal.size() - 1), 100.0 / 60.0, 1e-12);
}

TEST(Sensors, CleanStreamIsTheDelayedTruth)
{
    const auto truth = ramp(2.0, 1e-3);
    const auto p = SensorProfile::normal().clean();
    const auto m = emulate_sensor(truth, p, 3);
    for (const auto& s : m) {
        if (s.t >= p.latency) {
            EXPECT_NEAR(s.value, s.t - p.latency, 1e-9) << "t " << s.t;
        }
    }
}

TEST(Sensors, LatencyMaximizesTheCrossCorrelation)
{
    TimeSeries truth{0.0, 1e-3, {}};
    for (int i = 0; i <= 4000; ++i)
        truth.values.push_back(std::sin(2.0 * kPi * 1.3 * i * 1e-3) + 0.5 * std::sin(2.0 * kPi * 3.1 * i * 1e-3));
    auto p = SensorProfile::event();
    p.sigma = 0.0;
    const auto m = emulate_sensor(truth, p, 9);
    double best = -kInf, best_lag = -1.0;
    for (int lag_ms = 0; lag_ms <= 40; ++lag_ms) {
        const double lag = lag_ms * 1e-3;
        double c = 0.0;
        for (const auto& s : m)
            if (s.t > 0.1)
                c -= std::pow(s.value - truth.at_time(s.t - lag), 2);
        if (c > best) {
            best = c;
            best_lag = lag;
        }
    }
    EXPECT_NEAR(best_lag, p.latency, 1e-9);
}

TEST(Sensors, QuantizationAndHold)
{
    SensorProfile p;
    p.sigma = 0.0;
    p.quantization = 0.01;
    SensorChannel ch(p, 1);
    EXPECT_NEAR(ch.corrupt(0.0, 0.1234), 0.12, 1e-12);
    const std::vector<Measurement> m{{0.0, 1.0}, {0.1, 2.0}, {0.2, 3.0}};
    EXPECT_EQ(held_value(m, -1.0), 1.0);
    EXPECT_EQ(held_value(m, 0.15), 2.0);
    EXPECT_EQ(held_value(m, 5.0), 3.0);
}

TEST(Sensors, KindNamesRoundTrip)
{
    for (auto k : {SensorKind::Normal, SensorKind::Event, SensorKind::Thermal, SensorKind::Imu})
        EXPECT_EQ(sensor_kind_from_string(to_string(k)), k);
    EXPECT_THROW(sensor_kind_from_string("lidar"), Error);
    SensorProfile bad;
    bad.rate = 0.0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Sensors, TruthHistoryInterpolates)
{
    TruthHistory h(1.0);
    h.push(0.0, 0.0);
    h.push(0.1, 1.0);
    EXPECT_NEAR(h.at(0.025), 0.25, 1e-12);
    EXPECT_EQ(h.at(-1.0), 0.0);
    EXPECT_EQ(h.at(9.0), 1.0);
}

TEST(Supervisor, SwitchesAfterConsecutiveLargeInnovations)
{
    ScheduleSupervisor s;
    EXPECT_FALSE(s.on_innovation(6.0, 1.0));
    EXPECT_FALSE(s.on_innovation(6.0, 1.0));
    EXPECT_FALSE(s.on_innovation(1.0, 1.0));
    EXPECT_FALSE(s.on_innovation(6.0, 1.0));
    EXPECT_FALSE(s.on_innovation(-6.0, 1.0));
    EXPECT_EQ(s.current(), Schedule::WithKf);
    EXPECT_TRUE(s.on_innovation(6.0, 1.0));
    EXPECT_EQ(s.current(), Schedule::CameraOnly);
}

TEST(Supervisor, ReturnsOnceTheErrorHasSettled)
{
    SupervisorConfig cfg;
    cfg.consecutive = 1;
    ScheduleSupervisor s(cfg);
    ASSERT_TRUE(s.on_innovation(10.0, 1.0));
    EXPECT_FALSE(s.on_error(0.0, 0.01));
    EXPECT_FALSE(s.on_error(0.5, 0.1));
    EXPECT_FALSE(s.on_error(0.6, 0.01));
    EXPECT_FALSE(s.on_error(1.5, 0.01));
    EXPECT_TRUE(s.on_error(1.6, 0.01));
    EXPECT_EQ(s.current(), Schedule::WithKf);
}

TEST(Supervisor, PinnedNeverSwitches)
{
    SupervisorConfig cfg;
    cfg.pinned = Schedule::CameraOnly;
    ScheduleSupervisor s(cfg);
    for (int i = 0; i < 10; ++i)
        EXPECT_FALSE(s.on_error(i, 0.0));
    EXPECT_EQ(s.current(), Schedule::CameraOnly);
}

TEST(Scenario, PresetsRunAndAreDeterministic)
{
    for (const auto& name : scenario_preset_names()) {
        const auto s = scenario_preset(name);
        const auto a = run_scenario(s);
        ASSERT_FALSE(a.diverged) << name << ": " << a.diagnostic;
        const auto b = run_scenario(s);
        EXPECT_EQ(a.truth, b.truth) << name;
    }
    EXPECT_THROW(scenario_preset("hurricane"), Error);
}

TEST(Scenario, StationaryHoverStaysInsideTheNoiseBand)
{
    const auto tr = run_scenario(scenario_preset("stationary"));
    const auto m = servo_metrics(tr, 2.0);
    EXPECT_LT(m.max_deviation, 0.02);
    EXPECT_EQ(tr.switch_to_camera.size(), 0u);
}

TEST(Scenario, ReferenceStepReachesTheReference)
{
    const auto tr = run_scenario(scenario_preset("step_normal_kf"));
    const auto m = servo_metrics(tr, 1.0);
    EXPECT_LT(std::abs(tr.truth.back() - 1.0), 0.02);
    EXPECT_LT(m.overshoot_percent, 20.0);
    for (int s : tr.schedule)
        EXPECT_EQ(s, static_cast<int>(Schedule::WithKf));
}

TEST(Scenario, TargetStepTriggersCameraOnlyAndBack)
{
    const auto tr = run_scenario(scenario_preset("target_step_normal"));
    ASSERT_EQ(tr.switch_to_camera.size(), 1u);
    EXPECT_GT(tr.switch_to_camera.front(), 2.0);
    EXPECT_LT(tr.switch_to_camera.front(), 2.1);
    ASSERT_EQ(tr.switch_to_kf.size(), 1u);
    EXPECT_GT(tr.switch_to_kf.front(), tr.switch_to_camera.front());
}

TEST(Scenario, WindIsCalibratedToTheDeviation)
{
    const auto s = scenario_preset("wind");
    ASSERT_EQ(s.events.forces.size(), 1u);
    const auto m = servo_metrics(run_scenario(s), 2.0);
    EXPECT_NEAR(m.max_deviation, 0.18, 0.005);
    EXPECT_GT(std::abs(m.steady_offset), 0.01);
}

TEST(Scenario, EventValidationRejectsOutOfHorizonEvents)
{
    EventScript e;
    e.targets.push_back({20.0, 1.0});
    EXPECT_THROW(e.validate(10.0), Error);
}

TEST(Presets, IdentifiedModelsHitTheirRiseTime)
{
    for (const auto* row : {&kNormalWithKf, &kEventWithKf}) {
        const auto m = identified_model(*row);
        SimulationConfig cfg;
        cfg.early_stop = false;
        const auto r = closed_loop_step(m, {row->kp, row->kd}, 1.0, cfg);
        EXPECT_NEAR(step_metrics(r.traces).rise_time, row->rise_time, 2e-3) << row->name;
    }
}
