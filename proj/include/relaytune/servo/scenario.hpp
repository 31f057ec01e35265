#pragma once

#include "relaytune/model/closed_loop.hpp"
#include "relaytune/servo/kalman.hpp"
#include "relaytune/servo/sensors.hpp"
#include "relaytune/servo/supervisor.hpp"

namespace relaytune {

/// One decoupled axis: u -> K e^{-tau s} / prod(T_i s + 1) -> force-like drive f, then
/// v' = (f - v) / T_last + F / m and p' = v. The last time constant of the model acts as
/// the drag lag, so p/u is the model's transfer function and F enters as an acceleration.
struct AxisPlant {
    TransferFunctionModel model = TransferFunctionModel::inner(1.0, 0.3, 0.2, 0.0128);
    double mass = 1.5;

    void validate() const
    {
        model.validate();
        require(model.integrator_order == 1, "axis plant: model must have exactly one integrator");
        require(!model.time_constants.empty(), "axis plant: model needs a drag time constant");
        require(std::isfinite(mass) && mass > 0.0, "axis plant: mass must be positive");
    }
};

class AxisStepper {
public:
    AxisStepper(const AxisPlant& plant, double dt) : dt_(dt), inv_mass_(1.0 / plant.mass)
    {
        plant.validate();
        TransferFunctionModel drive = plant.model;
        td_ = drive.time_constants.back();
        drive.time_constants.pop_back();
        drive.integrator_order = 0;
        drive_ = LtiStepper(drive, dt);
        decay_ = std::exp(-dt / td_);
    }

    [[nodiscard]] double position() const { return p_; }
    [[nodiscard]] double velocity() const { return v_; }
    [[nodiscard]] double acceleration() const { return a_; }

    void set_position(double p) { p_ = p; }

    /// Holds u and the external force over one step (exact for the drag and integrator).
    void advance(double u, double force)
    {
        const double f = drive_.advance(u);
        const double w = f + td_ * force * inv_mass_;
        a_ = (w - v_) / td_;
        p_ += w * dt_ + (v_ - w) * td_ * (1.0 - decay_);
        v_ = w + (v_ - w) * decay_;
    }

private:
    double dt_;
    double inv_mass_;
    double td_ = 1.0;
    double decay_ = 0.0;
    LtiStepper drive_;
    double p_ = 0.0, v_ = 0.0, a_ = 0.0;
};

struct ScheduleSet {
    PdGains with_kf{1.1766, 0.3143};
    PdGains camera_only{0.3739, 0.1705};

    [[nodiscard]] PdGains operator[](Schedule s) const { return s == Schedule::WithKf ? with_kf : camera_only; }
};

/// The tracked target moves by `delta` along the axis.
struct TargetStep {
    double t = 0.0;
    double delta = 0.0;
};

/// Desired relative position set to `value`.
struct ReferenceStep {
    double t = 0.0;
    double value = 0.0;
};

/// Constant external force (N) added from t on; wind is a step of this kind.
struct ForceStep {
    double t = 0.0;
    double force = 0.0;
};

/// Force ramped linearly from 0 to `peak` (N) over `ramp` seconds, then released at once.
struct PullRelease {
    double t = 0.0;
    double ramp = 2.0;
    double peak = 10.0;
};

struct EventScript {
    std::vector<TargetStep> targets;
    std::vector<ReferenceStep> references;
    std::vector<ForceStep> forces;
    std::vector<PullRelease> pulls;

    void validate(double horizon) const
    {
        auto in_range = [&](double t, const char* what) {
            require(std::isfinite(t) && t >= 0.0 && t <= horizon,
                    std::string("scenario: ") + what + " time outside the horizon");
        };
        for (const auto& e : targets) {
            in_range(e.t, "target step");
            require(std::isfinite(e.delta), "scenario: target step must be finite");
        }
        for (const auto& e : references) {
            in_range(e.t, "reference step");
            require(std::isfinite(e.value), "scenario: reference must be finite");
        }
        for (const auto& e : forces) {
            in_range(e.t, "force step");
            require(std::isfinite(e.force), "scenario: force must be finite");
        }
        for (const auto& e : pulls) {
            in_range(e.t, "pull");
            in_range(e.t + e.ramp, "release");
            require(e.ramp > 0.0 && std::isfinite(e.peak), "scenario: pull needs a positive ramp and finite force");
        }
    }

    [[nodiscard]] double force_at(double t) const
    {
        double f = 0.0;
        for (const auto& e : forces)
            if (t >= e.t)
                f += e.force;
        for (const auto& e : pulls)
            if (t >= e.t && t < e.t + e.ramp)
                f += e.peak * (t - e.t) / e.ramp;
        return f;
    }

    [[nodiscard]] double target_at(double t) const
    {
        double p = 0.0;
        for (const auto& e : targets)
            if (t >= e.t)
                p += e.delta;
        return p;
    }

    [[nodiscard]] double reference_at(double t, double initial) const
    {
        double r = initial, last = -kInf;
        for (const auto& e : references)
            if (t >= e.t && e.t >= last) {
                r = e.value;
                last = e.t;
            }
        return r;
    }
};

/// Filter noise settings; non-positive values are taken from the sensor profiles.
struct KfTuning {
    double sigma_p = -1.0;
    double sigma_bias = 1e-3;
    double sigma_c = -1.0;
};

struct ServoScenario {
    SensorProfile camera = SensorProfile::normal();
    SensorProfile imu = SensorProfile::imu();
    ScheduleSet schedules;
    AxisPlant plant;
    SimulationConfig sim;
    KfTuning kf;
    SupervisorConfig supervisor;
    EventScript events;
    double horizon = 10.0;
    double initial_reference = 0.0;
    std::uint64_t rng_seed = 1;

    void validate() const
    {
        camera.validate();
        imu.validate();
        require(camera.kind != SensorKind::Imu, "scenario: camera profile has the imu kind");
        schedules.with_kf.validate();
        schedules.camera_only.validate();
        plant.validate();
        sim.validate();
        supervisor.validate();
        require(std::isfinite(horizon) && horizon > 0.0, "scenario: horizon must be positive");
        require(std::isfinite(initial_reference), "scenario: initial reference must be finite");
        events.validate(horizon);
    }

    [[nodiscard]] double kf_sigma_c() const
    {
        if (kf.sigma_c > 0.0)
            return kf.sigma_c;
        const double q = camera.quantization;
        return std::max(std::sqrt(camera.sigma * camera.sigma + camera.a_n * camera.a_n / 2.0 + q * q / 12.0), 1e-4);
    }
    [[nodiscard]] double kf_sigma_p() const { return kf.sigma_p > 0.0 ? kf.sigma_p : std::max(imu.sigma, 1e-3); }
};

/// Control-rate record of a scenario run. Positions are the vehicle relative to the target.
struct ServoTraces {
    double dt = 5e-3;
    std::vector<double> t, target, reference, truth, measurement, kf_position, kf_velocity, kf_bias, kf_sigma,
        error, control, force;
    std::vector<int> schedule;
    /// Camera frames: time, innovation and innovation standard deviation.
    std::vector<double> frame_t, innovation, innovation_sigma;
    std::vector<double> switch_to_camera, switch_to_kf;
    bool diverged = false;
    std::string diagnostic;

    [[nodiscard]] std::size_t size() const { return t.size(); }
};

/// Closed loop of one axis: plant, camera and IMU emulation, filter, supervisor and the
/// two PD schedules, advanced in sim ticks with sensor frames and control ticks merged
/// in time order.
///
/// The camera frame reports the scene `latency` earlier; the filter compares it with its
/// own estimate of that instant and applies the correction to the current state. When the
/// supervisor switches to Schedule 2 the filter position is re-initialized from the camera.
inline ServoTraces run_scenario(const ServoScenario& s)
{
    s.validate();
    const double dt = s.sim.dt_sim;
    const int ratio = s.sim.ticks_per_control();
    const auto steps = static_cast<std::size_t>(std::llround(s.horizon / dt));

    AxisStepper plant(s.plant, dt);
    plant.set_position(s.initial_reference);
    SensorChannel cam(s.camera, s.rng_seed * 0x9E3779B97F4A7C15ULL + 1);
    SensorChannel imu(s.imu, s.rng_seed * 0x9E3779B97F4A7C15ULL + 2);
    const double span = std::max({s.camera.latency, s.imu.latency, 1.0 / s.camera.rate}) + 0.5;
    TruthHistory rel(span), accel(span), estimate(span);

    KfState kf;
    kf.dt = 1.0 / s.imu.rate;
    kf.sigma_p = s.kf_sigma_p();
    kf.sigma_bias = s.kf.sigma_bias;
    kf.sigma_c = s.kf_sigma_c();
    kf.x << s.initial_reference, 0.0, 0.0;
    kf.p = Eigen::Vector3d(kf.sigma_c * kf.sigma_c, 1e-4, 1e-2).asDiagonal();

    ScheduleSupervisor sup(s.supervisor);
    PdController pd_kf(s.schedules.with_kf, s.sim, s.sim.actuator);
    PdController pd_cam(s.schedules.camera_only, s.sim, s.sim.actuator);

    ServoTraces tr;
    tr.dt = s.sim.dt_ctrl;
    double z_held = s.initial_reference;
    double u = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double target = s.events.target_at(t);
        const double y = plant.position() - target;
        if (!std::isfinite(y) || std::abs(y) > 1e3) {
            tr.diverged = true;
            tr.diagnostic = "diverged at t = " + std::to_string(t);
            break;
        }
        rel.push(t, y);
        accel.push(t, plant.acceleration());

        if (const auto tf = imu.due(t)) {
            kf = kf_predict(kf, imu.corrupt(*tf, accel.at(*tf - s.imu.latency)));
            estimate.push(*tf, kf.x(0));
        }
        if (const auto frame = cam.poll(t, rel)) {
            z_held = frame->value;
            const double lag = frame->t - s.camera.latency;
            const double z = frame->value + (kf.x(0) - estimate.at(lag));
            const auto upd = kf_update(kf, z);
            kf = upd.state;
            tr.frame_t.push_back(frame->t);
            tr.innovation.push_back(upd.innovation);
            tr.innovation_sigma.push_back(std::sqrt(upd.innovation_variance));
            if (sup.on_innovation(upd.innovation, upd.innovation_variance)) {
                tr.switch_to_camera.push_back(t);
                estimate.shift(z - kf.x(0));
                kf.x(0) = z;
                kf.p.row(0).setZero();
                kf.p.col(0).setZero();
                kf.p(0, 0) = kf.sigma_c * kf.sigma_c;
            }
        }

        if (k % static_cast<std::size_t>(ratio) == 0) {
            const double r = s.events.reference_at(t, s.initial_reference);
            const double u_kf = pd_kf.update(r - kf.x(0), r);
            const double u_cam = pd_cam.update(r - z_held, r);
            if (sup.on_error(t, r - z_held))
                tr.switch_to_kf.push_back(t);
            const Schedule sched = sup.current();
            u = sched == Schedule::WithKf ? u_kf : u_cam;
            tr.t.push_back(t);
            tr.target.push_back(target);
            tr.reference.push_back(r);
            tr.truth.push_back(y);
            tr.measurement.push_back(z_held);
            tr.kf_position.push_back(kf.x(0));
            tr.kf_velocity.push_back(kf.x(1));
            tr.kf_bias.push_back(kf.x(2));
            tr.kf_sigma.push_back(kf.position_sigma());
            tr.error.push_back(r - y);
            tr.control.push_back(u);
            tr.force.push_back(s.events.force_at(t));
            tr.schedule.push_back(static_cast<int>(sched));
        }
        plant.advance(u, s.events.force_at(t));
    }
    return tr;
}

struct ServoMetrics {
    double ise = 0.0;
    double max_deviation = 0.0;
    /// Mean error over the last second of the window.
    double steady_offset = 0.0;
    double overshoot_percent = 0.0;
    double rise_time = kInf;
    int switches = 0;
};

/// Metrics of the true error over [t0, t1]. Overshoot and rise time are measured on the
/// response from the value at t0 towards the reference at t1.
inline ServoMetrics servo_metrics(const ServoTraces& tr, double t0 = 0.0, double t1 = kInf)
{
    ServoMetrics m;
    m.switches = static_cast<int>(tr.switch_to_camera.size() + tr.switch_to_kf.size());
    std::size_t i0 = tr.size(), i1 = 0;
    for (std::size_t i = 0; i < tr.size(); ++i)
        if (tr.t[i] >= t0 - 1e-12 && tr.t[i] <= t1 + 1e-12) {
            i0 = std::min(i0, i);
            i1 = i;
        }
    if (i0 >= tr.size())
        return m;
    double tail_sum = 0.0;
    int tail_n = 0;
    const double t_end = tr.t[i1];
    for (std::size_t i = i0; i <= i1; ++i) {
        const double e = tr.error[i];
        if (i > i0)
            m.ise += 0.5 * (e * e + tr.error[i - 1] * tr.error[i - 1]) * tr.dt;
        m.max_deviation = std::max(m.max_deviation, std::abs(e));
        if (tr.t[i] >= t_end - 1.0) {
            tail_sum += e;
            ++tail_n;
        }
    }
    m.steady_offset = tail_n ? tail_sum / tail_n : 0.0;

    const double y0 = tr.truth[i0];
    const double step = tr.reference[i1] - y0;
    if (std::abs(step) > 1e-9) {
        RunTraces rt;
        rt.dt = tr.dt;
        for (std::size_t i = i0; i <= i1; ++i) {
            rt.t.push_back(tr.t[i] - tr.t[i0]);
            rt.reference.push_back(1.0);
            rt.output.push_back((tr.truth[i] - y0) / step);
            rt.error.push_back(tr.error[i] / step);
            rt.control.push_back(tr.control[i]);
        }
        const StepMetrics sm = step_metrics(rt);
        m.overshoot_percent = sm.overshoot_percent;
        m.rise_time = sm.rise_time;
    }
    return m;
}

/// Wind force (N) for which the noise-free scenario deviates by `deviation` after a wind
/// step at `t`. The loop is linear in the force, so one unit run fixes the scale.
inline double calibrate_wind_force(ServoScenario s, double t, double deviation)
{
    require(deviation > 0.0, "calibrate_wind_force: deviation must be positive");
    s.camera = s.camera.clean();
    s.imu = s.imu.clean();
    s.events = {};
    s.events.forces.push_back({t, 1.0});
    const ServoTraces tr = run_scenario(s);
    require(!tr.diverged, "calibrate_wind_force: unit force run diverged");
    const double d = servo_metrics(tr, t).max_deviation;
    require(d > 0.0, "calibrate_wind_force: force has no effect");
    return deviation / d;
}

} // namespace relaytune
