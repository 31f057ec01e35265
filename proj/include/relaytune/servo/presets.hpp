#pragma once

#include "relaytune/servo/scenario.hpp"

namespace relaytune {

/// Identified altitude rows: time constants, delay, gains and the rise time they produced.
struct IdentifiedRow {
    const char* name;
    double t_prop, t1, tau, kp, kd, rise_time;
};

inline constexpr IdentifiedRow kNormalWithKf{"normal, with filter", 0.30, 0.20, 0.0128, 1.1766, 0.3143, 0.63};
inline constexpr IdentifiedRow kNormalNoKf{"normal, camera only", 0.1355, 1.6825, 0.06, 0.3739, 0.1705, 0.71};
inline constexpr IdentifiedRow kEventWithKf{"event, with filter", 0.30, 0.20, 0.0128, 1.2993, 0.3471, 0.49};
inline constexpr IdentifiedRow kEventNoKf{"event, camera only", 0.0135, 1.6834, 0.0237, 0.888, 0.3258, 0.64};

/// The row's model with K_eq recovered from its rise time.
inline TransferFunctionModel identified_model(const IdentifiedRow& r, const SimulationConfig& sim = {})
{
    const auto m = TransferFunctionModel::inner(1.0, r.t_prop, r.t1, r.tau);
    return m.with_gain(gain_for_rise_time(m, {r.kp, r.kd}, r.rise_time, sim));
}

/// Altitude servo loop of one camera with its identified schedules and recovered K_eq.
inline ServoScenario reference_scenario(SensorKind camera = SensorKind::Normal)
{
    ServoScenario s;
    s.camera = SensorProfile::for_kind(camera);
    const IdentifiedRow& kf = camera == SensorKind::Event ? kEventWithKf : kNormalWithKf;
    const IdentifiedRow& cam = camera == SensorKind::Event ? kEventNoKf : kNormalNoKf;
    s.plant.model = identified_model(kf, s.sim);
    s.schedules = {{kf.kp, kf.kd}, {cam.kp, cam.kd}};
    return s;
}

inline const std::vector<std::string>& scenario_preset_names()
{
    static const std::vector<std::string> names{
        "stationary",         "step_normal_kf",     "step_event_kf", "step_normal_nokf", "step_event_nokf",
        "target_step_normal", "target_step_event", "wind",          "pull_release"};
    return names;
}

/// Named scenarios. Reference steps run with the schedule pinned; target steps, wind and
/// pull-release run with the supervisor free.
inline ServoScenario scenario_preset(const std::string& name)
{
    const auto starts = [&](const char* p) { return name.rfind(p, 0) == 0; };
    const SensorKind cam = name.find("event") != std::string::npos ? SensorKind::Event : SensorKind::Normal;
    ServoScenario s = reference_scenario(cam);
    if (name == "stationary") {
        s.horizon = 20.0;
    } else if (starts("step_")) {
        s.supervisor.pinned = name.ends_with("_nokf") ? Schedule::CameraOnly : Schedule::WithKf;
        s.events.references.push_back({1.0, 1.0});
        s.horizon = 8.0;
    } else if (starts("target_step_")) {
        s.events.targets.push_back({2.0, -1.0});
        s.horizon = 12.0;
    } else if (name == "wind") {
        s.horizon = 15.0;
        s.events.forces.push_back({2.0, calibrate_wind_force(s, 2.0, 0.18)});
    } else if (name == "pull_release") {
        s.horizon = 15.0;
        s.events.pulls.push_back({2.0, 3.0, 10.0});
    } else {
        throw Error("unknown scenario preset '" + name + "'");
    }
    return s;
}

} // namespace relaytune
