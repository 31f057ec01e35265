#pragma once

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "relaytune/dnn/identify.hpp"
#include "relaytune/servo/scenario.hpp"

namespace relaytune {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace detail {

// JSON has no infinities: +-inf travel as null and come back as +inf unless the
// reader knows the sign.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double num_or(const Json& j, double inf_value) { return j.is_null() ? inf_value : j.get<double>(); }

template <class T>
void read(const Json& j, const char* key, T& out)
{
    if (auto it = j.find(key); it != j.end())
        out = it->template get<T>();
}

inline void read_num(const Json& j, const char* key, double& out, double inf_value = kInf)
{
    if (auto it = j.find(key); it != j.end())
        out = num_or(*it, inf_value);
}

inline Json versioned(const std::string& format, Json body)
{
    body["format"] = format;
    body["version"] = kFormatVersion;
    return body;
}

inline void check_format(const Json& j, const std::string& format)
{
    require(j.is_object(), format + ": expected a JSON object");
    if (auto it = j.find("format"); it != j.end())
        require(it->get<std::string>() == format,
                "expected a " + format + " document, got " + it->get<std::string>());
    if (auto it = j.find("version"); it != j.end())
        require(it->get<int>() <= kFormatVersion, format + ": document version is newer than this tool");
}

template <class M>
Json matrix_json(const M& m)
{
    Json data = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            data.push_back(m(r, c));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <class M>
M matrix_from_json(const Json& j)
{
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    require(data.size() == static_cast<std::size_t>(rows * cols), "matrix: data length does not match shape");
    M m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = data[k++].get<typename M::Scalar>();
    return m;
}

} // namespace detail

inline void to_json(Json& j, const TransferFunctionModel& m)
{
    j = {{"gain", m.gain}, {"time_constants_s", m.time_constants}, {"delay_s", m.delay},
         {"integrator_order", m.integrator_order}};
}
inline void from_json(const Json& j, TransferFunctionModel& m)
{
    detail::read(j, "gain", m.gain);
    detail::read(j, "time_constants_s", m.time_constants);
    detail::read(j, "delay_s", m.delay);
    detail::read(j, "integrator_order", m.integrator_order);
}

inline void to_json(Json& j, const PdGains& g) { j = {{"kp", g.kp}, {"kd", g.kd}}; }
inline void from_json(const Json& j, PdGains& g)
{
    detail::read(j, "kp", g.kp);
    detail::read(j, "kd", g.kd);
}

inline void to_json(Json& j, const SimulationConfig& c)
{
    j = {{"dt_sim_s", c.dt_sim},
         {"dt_ctrl_s", c.dt_ctrl},
         {"horizon_s", c.horizon},
         {"actuator_low", detail::num(c.actuator.low)},
         {"actuator_high", detail::num(c.actuator.high)},
         {"outer_saturation", detail::num(c.outer_saturation)},
         {"filter_cutoff_hz", c.filter_cutoff_hz},
         {"rng_seed", c.rng_seed},
         {"derivative_on_measurement", c.derivative_on_measurement},
         {"early_stop", c.early_stop},
         {"settle_band", c.settle_band},
         {"settle_hold_s", c.settle_hold}};
}
inline void from_json(const Json& j, SimulationConfig& c)
{
    detail::read(j, "dt_sim_s", c.dt_sim);
    detail::read(j, "dt_ctrl_s", c.dt_ctrl);
    detail::read(j, "horizon_s", c.horizon);
    detail::read_num(j, "actuator_low", c.actuator.low, -kInf);
    detail::read_num(j, "actuator_high", c.actuator.high);
    detail::read_num(j, "outer_saturation", c.outer_saturation);
    detail::read(j, "filter_cutoff_hz", c.filter_cutoff_hz);
    detail::read(j, "rng_seed", c.rng_seed);
    detail::read(j, "derivative_on_measurement", c.derivative_on_measurement);
    detail::read(j, "early_stop", c.early_stop);
    detail::read(j, "settle_band", c.settle_band);
    detail::read(j, "settle_hold_s", c.settle_hold);
}

inline void to_json(Json& j, const MrftConfig& c) { j = {{"h", c.h}, {"beta", c.beta}}; }
inline void from_json(const Json& j, MrftConfig& c)
{
    detail::read(j, "h", c.h);
    detail::read(j, "beta", c.beta);
}

inline void to_json(Json& j, const NpMrftConfig& c)
{
    j = {{"h", c.base.h}, {"beta", c.base.beta}, {"tau_obs_s", c.tau_obs}, {"a_n", c.a_n},
         {"noise_highpass_cutoff_hz", c.noise_highpass_cutoff}};
}
inline void from_json(const Json& j, NpMrftConfig& c)
{
    from_json(j, c.base);
    detail::read(j, "tau_obs_s", c.tau_obs);
    detail::read(j, "a_n", c.a_n);
    detail::read(j, "noise_highpass_cutoff_hz", c.noise_highpass_cutoff);
}

inline void to_json(Json& j, const NoiseSpec& n)
{
    j = {{"amplitude", n.amplitude},   {"omega_rad_s", n.omega},       {"phase_rad", n.phase},
         {"fluctuation", n.fluctuation}, {"white_sigma", n.white_sigma}, {"bias", n.bias},
         {"seed", n.seed}};
}
inline void from_json(const Json& j, NoiseSpec& n)
{
    detail::read(j, "amplitude", n.amplitude);
    detail::read(j, "omega_rad_s", n.omega);
    detail::read(j, "phase_rad", n.phase);
    detail::read(j, "fluctuation", n.fluctuation);
    detail::read(j, "white_sigma", n.white_sigma);
    detail::read(j, "bias", n.bias);
    detail::read(j, "seed", n.seed);
}

inline void to_json(Json& j, const LimitCycleOptions& o)
{
    j = {{"samples", o.samples}, {"window_periods", o.window}, {"tolerance", detail::num(o.tolerance)},
         {"noise_amplitude", o.noise_amplitude}};
}
inline void from_json(const Json& j, LimitCycleOptions& o)
{
    detail::read(j, "samples", o.samples);
    detail::read(j, "window_periods", o.window);
    detail::read_num(j, "tolerance", o.tolerance);
    detail::read(j, "noise_amplitude", o.noise_amplitude);
}

inline void to_json(Json& j, const RelayTestConfig& c)
{
    j = {{"relay", c.relay},
         {"noise_protected", c.noise_protected},
         {"dt_sim_s", c.dt_sim},
         {"dt_ctrl_s", c.dt_ctrl},
         {"horizon_s", c.horizon},
         {"periods", c.periods},
         {"noise", c.noise},
         {"estimate_noise_online", c.estimate_noise_online},
         {"calibration_periods", c.calibration_periods},
         {"tau_obs_factor", c.tau_obs_factor},
         {"cycle", c.cycle}};
}
inline void from_json(const Json& j, RelayTestConfig& c)
{
    detail::read(j, "relay", c.relay);
    detail::read(j, "noise_protected", c.noise_protected);
    detail::read(j, "dt_sim_s", c.dt_sim);
    detail::read(j, "dt_ctrl_s", c.dt_ctrl);
    detail::read(j, "horizon_s", c.horizon);
    detail::read(j, "periods", c.periods);
    detail::read(j, "noise", c.noise);
    detail::read(j, "estimate_noise_online", c.estimate_noise_online);
    detail::read(j, "calibration_periods", c.calibration_periods);
    detail::read(j, "tau_obs_factor", c.tau_obs_factor);
    detail::read(j, "cycle", c.cycle);
}

inline void to_json(Json& j, const LimitCycle& c)
{
    j = {{"amplitude", c.amplitude},       {"period_s", c.period},
         {"omega_rad_s", c.omega},         {"bias", c.bias},
         {"harmonic_amplitude", c.harmonic_amplitude},
         {"error_wave", c.error_wave},     {"control_wave", c.control_wave},
         {"start_time_s", c.start_time},   {"periods_seen", c.periods_seen}};
}
inline void from_json(const Json& j, LimitCycle& c)
{
    detail::read(j, "amplitude", c.amplitude);
    detail::read(j, "period_s", c.period);
    detail::read(j, "omega_rad_s", c.omega);
    detail::read(j, "bias", c.bias);
    detail::read(j, "harmonic_amplitude", c.harmonic_amplitude);
    detail::read(j, "error_wave", c.error_wave);
    detail::read(j, "control_wave", c.control_wave);
    detail::read(j, "start_time_s", c.start_time);
    detail::read(j, "periods_seen", c.periods_seen);
}

inline void to_json(Json& j, const TuningSpec& s)
{
    j = {{"min_phase_margin_deg", s.min_phase_margin}, {"step_amplitude", s.step_amplitude}, {"budget", s.budget},
         {"beta_altitude", s.beta_altitude}, {"beta_lateral", s.beta_lateral}};
}
inline void from_json(const Json& j, TuningSpec& s)
{
    detail::read(j, "min_phase_margin_deg", s.min_phase_margin);
    detail::read(j, "step_amplitude", s.step_amplitude);
    detail::read(j, "budget", s.budget);
    detail::read(j, "beta_altitude", s.beta_altitude);
    detail::read(j, "beta_lateral", s.beta_lateral);
}

inline void to_json(Json& j, const AxisRange& r)
{
    j = {{"lo", r.lo}, {"hi", r.hi}, {"points", r.points}, {"offset", r.offset}};
}
inline void from_json(const Json& j, AxisRange& r)
{
    detail::read(j, "lo", r.lo);
    detail::read(j, "hi", r.hi);
    detail::read(j, "points", r.points);
    detail::read(j, "offset", r.offset);
}

inline void to_json(Json& j, const InnerLoop& l) { j = {{"model", l.model}, {"gains", l.gains}}; }
inline void from_json(const Json& j, InnerLoop& l)
{
    detail::read(j, "model", l.model);
    detail::read(j, "gains", l.gains);
}

inline void to_json(Json& j, const GridRanges& r)
{
    j = {{"kind", to_string(r.kind)}, {"t_prop_s", r.t_prop}, {"t1_s", r.t1}, {"tau_s", r.tau}, {"t2_s", r.t2}};
    if (r.inner)
        j["inner"] = *r.inner;
}
inline void from_json(const Json& j, GridRanges& r)
{
    if (auto it = j.find("kind"); it != j.end()) {
        const LoopKind k = loop_kind_from_string(it->get<std::string>());
        if (k == LoopKind::Attitude)
            r = GridRanges::attitude();
        else if (k == LoopKind::Altitude)
            r = GridRanges::altitude();
        else
            r = GridRanges::lateral({});
    }
    detail::read(j, "t_prop_s", r.t_prop);
    detail::read(j, "t1_s", r.t1);
    detail::read(j, "tau_s", r.tau);
    detail::read(j, "t2_s", r.t2);
    if (auto it = j.find("inner"); it != j.end())
        r.inner = it->get<InnerLoop>();
    else if (r.kind == LoopKind::Lateral)
        r.inner.reset();
}

inline void to_json(Json& j, const ControllerEntry& e)
{
    j = {{"gains", e.gains},
         {"ise", detail::num(e.ise)},
         {"phase_margin_deg", e.phase_margin},
         {"ref_amplitude", e.ref_amplitude},
         {"ref_period_s", e.ref_period},
         {"ref_bias", e.ref_bias},
         {"ref_harmonic", e.ref_harmonic}};
}
inline void from_json(const Json& j, ControllerEntry& e)
{
    detail::read(j, "gains", e.gains);
    detail::read_num(j, "ise", e.ise);
    detail::read(j, "phase_margin_deg", e.phase_margin);
    detail::read(j, "ref_amplitude", e.ref_amplitude);
    detail::read(j, "ref_period_s", e.ref_period);
    detail::read(j, "ref_bias", e.ref_bias);
    detail::read(j, "ref_harmonic", e.ref_harmonic);
}

/// Grid and controller table in one artifact.
inline Json grid_json(const ProcessGrid& g, const ControllerTable& t, int candidates = 0)
{
    require(g.size() == t.entries.size(), "grid artifact: grid and controller table disagree");
    Json classes = Json::array();
    for (std::size_t i = 0; i < g.size(); ++i)
        classes.push_back({{"params", g.classes[i].params},
                           {"model", g.classes[i].model},
                           {"time_scale", g.classes[i].time_scale},
                           {"controller", t.entries[i]}});
    Json jm = Json::array();
    for (const auto& row : g.j) {
        Json r = Json::array();
        for (double v : row)
            r.push_back(detail::num(v));
        jm.push_back(std::move(r));
    }
    return detail::versioned("relaytune.grid", {{"kind", to_string(g.kind)},
                                                {"ranges", g.ranges},
                                                {"target_j_percent", g.target_j},
                                                {"relay", t.relay},
                                                {"candidates", candidates},
                                                {"classes", std::move(classes)},
                                                {"j_percent", std::move(jm)}});
}

inline GridBuild grid_from_json(const Json& j)
{
    detail::check_format(j, "relaytune.grid");
    GridBuild b;
    b.grid.kind = loop_kind_from_string(j.at("kind").get<std::string>());
    b.grid.ranges = j.at("ranges").get<GridRanges>();
    b.grid.target_j = j.at("target_j_percent").get<double>();
    b.table.relay = j.at("relay").get<MrftConfig>();
    detail::read(j, "candidates", b.candidates);
    for (const auto& c : j.at("classes")) {
        ProcessClass pc;
        pc.params = c.at("params").get<std::vector<double>>();
        pc.model = c.at("model").get<TransferFunctionModel>();
        detail::read(c, "time_scale", pc.time_scale);
        b.grid.classes.push_back(std::move(pc));
        b.table.entries.push_back(c.at("controller").get<ControllerEntry>());
    }
    for (const auto& row : j.at("j_percent")) {
        std::vector<double> r;
        for (const auto& v : row)
            r.push_back(detail::num_or(v, kInf));
        b.grid.j.push_back(std::move(r));
    }
    require(b.grid.j.size() == b.grid.size(), "grid artifact: J matrix size does not match the class count");
    return b;
}

inline void to_json(Json& j, const FeatureOptions& f)
{
    j = {{"samples", f.samples}, {"include_control", f.include_control}, {"harmonics", f.harmonics}};
}
inline void from_json(const Json& j, FeatureOptions& f)
{
    detail::read(j, "samples", f.samples);
    detail::read(j, "include_control", f.include_control);
    detail::read(j, "harmonics", f.harmonics);
}

inline void to_json(Json& j, const AugmentationSpec& a)
{
    j = {{"examples_per_class", a.examples_per_class}, {"sigma_max_a0", a.sigma_max}, {"bias_max_a0", a.bias_max},
         {"seed", a.seed}};
}
inline void from_json(const Json& j, AugmentationSpec& a)
{
    detail::read(j, "examples_per_class", a.examples_per_class);
    detail::read(j, "sigma_max_a0", a.sigma_max);
    detail::read(j, "bias_max_a0", a.bias_max);
    detail::read(j, "seed", a.seed);
}

inline void to_json(Json& j, const AdamConfig& a)
{
    j = {{"step", a.step}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon},
         {"weight_decay", a.weight_decay}};
}
inline void from_json(const Json& j, AdamConfig& a)
{
    detail::read(j, "step", a.step);
    detail::read(j, "beta1", a.beta1);
    detail::read(j, "beta2", a.beta2);
    detail::read(j, "epsilon", a.epsilon);
    detail::read(j, "weight_decay", a.weight_decay);
}

inline void to_json(Json& j, const TrainConfig& c)
{
    j = {{"hidden", c.hidden},        {"adam", c.adam},           {"epochs", c.epochs},
         {"batch", c.batch},          {"rng_seed", c.rng_seed},   {"augmentation", c.augmentation},
         {"features", c.features},    {"j_scale", c.j_scale},     {"j_cap", c.j_cap},
         {"j_offset", c.j_offset},    {"loss", to_string(c.loss)}, {"cost_weight", c.cost_weight}};
}
inline void from_json(const Json& j, TrainConfig& c)
{
    detail::read(j, "hidden", c.hidden);
    detail::read(j, "adam", c.adam);
    detail::read(j, "epochs", c.epochs);
    detail::read(j, "batch", c.batch);
    detail::read(j, "rng_seed", c.rng_seed);
    detail::read(j, "augmentation", c.augmentation);
    detail::read(j, "features", c.features);
    detail::read(j, "j_scale", c.j_scale);
    detail::read(j, "j_cap", c.j_cap);
    detail::read(j, "j_offset", c.j_offset);
    if (auto it = j.find("loss"); it != j.end())
        c.loss = train_loss_from_string(it->get<std::string>());
    detail::read(j, "cost_weight", c.cost_weight);
}

inline Json model_json(const MlpModel& m)
{
    Json layers = Json::array();
    for (std::size_t k = 0; k < m.weights.size(); ++k)
        layers.push_back({{"weights", detail::matrix_json(m.weights[k])},
                          {"bias", detail::matrix_json(Eigen::MatrixXf(m.biases[k]))}});
    return detail::versioned("relaytune.model",
                             {{"sizes", m.sizes},
                              {"layers", std::move(layers)},
                              {"input_mean", detail::matrix_json(Eigen::MatrixXf(m.input_mean))},
                              {"input_scale", detail::matrix_json(Eigen::MatrixXf(m.input_scale))},
                              {"features", m.features},
                              {"label_weights", detail::matrix_json(m.label_weights)},
                              {"loss", to_string(m.loss)}});
}

inline MlpModel model_from_json(const Json& j)
{
    detail::check_format(j, "relaytune.model");
    MlpModel m;
    m.sizes = j.at("sizes").get<std::vector<int>>();
    for (const auto& l : j.at("layers")) {
        m.weights.push_back(detail::matrix_from_json<Eigen::MatrixXf>(l.at("weights")));
        m.biases.push_back(detail::matrix_from_json<Eigen::MatrixXf>(l.at("bias")).col(0));
    }
    m.input_mean = detail::matrix_from_json<Eigen::MatrixXf>(j.at("input_mean")).col(0);
    m.input_scale = detail::matrix_from_json<Eigen::MatrixXf>(j.at("input_scale")).col(0);
    m.features = j.at("features").get<FeatureOptions>();
    m.label_weights = detail::matrix_from_json<Eigen::MatrixXd>(j.at("label_weights"));
    m.loss = train_loss_from_string(j.at("loss").get<std::string>());
    m.validate();
    return m;
}

inline void to_json(Json& j, const SensorProfile& p)
{
    j = {{"kind", to_string(p.kind)}, {"rate_hz", p.rate},      {"latency_s", p.latency},
         {"sigma", p.sigma},          {"a_n", p.a_n},           {"omega_n_rad_s", p.omega_n},
         {"psi_n_rad", p.psi_n},      {"quantization", p.quantization}, {"bias", p.bias}};
}
inline void from_json(const Json& j, SensorProfile& p)
{
    if (auto it = j.find("kind"); it != j.end())
        p = SensorProfile::for_kind(sensor_kind_from_string(it->get<std::string>()));
    detail::read(j, "rate_hz", p.rate);
    detail::read(j, "latency_s", p.latency);
    detail::read(j, "sigma", p.sigma);
    detail::read(j, "a_n", p.a_n);
    detail::read(j, "omega_n_rad_s", p.omega_n);
    detail::read(j, "psi_n_rad", p.psi_n);
    detail::read(j, "quantization", p.quantization);
    detail::read(j, "bias", p.bias);
}

inline void to_json(Json& j, const SupervisorConfig& c)
{
    j = {{"threshold_sigmas", c.threshold_sigmas}, {"consecutive", c.consecutive},
         {"settle_band_m", c.settle_band}, {"settle_time_s", c.settle_time}};
    if (c.pinned)
        j["pinned"] = static_cast<int>(*c.pinned);
}
inline void from_json(const Json& j, SupervisorConfig& c)
{
    detail::read(j, "threshold_sigmas", c.threshold_sigmas);
    detail::read(j, "consecutive", c.consecutive);
    detail::read(j, "settle_band_m", c.settle_band);
    detail::read(j, "settle_time_s", c.settle_time);
    if (auto it = j.find("pinned"); it != j.end() && !it->is_null()) {
        const int s = it->get<int>();
        require(s == 1 || s == 2, "supervisor: pinned schedule must be 1 or 2");
        c.pinned = static_cast<Schedule>(s);
    }
}

inline void to_json(Json& j, const EventScript& e)
{
    Json targets = Json::array(), refs = Json::array(), forces = Json::array(), pulls = Json::array();
    for (const auto& s : e.targets)
        targets.push_back({{"t_s", s.t}, {"delta_m", s.delta}});
    for (const auto& s : e.references)
        refs.push_back({{"t_s", s.t}, {"value_m", s.value}});
    for (const auto& s : e.forces)
        forces.push_back({{"t_s", s.t}, {"force_n", s.force}});
    for (const auto& s : e.pulls)
        pulls.push_back({{"t_s", s.t}, {"ramp_s", s.ramp}, {"peak_n", s.peak}});
    j = {{"target_steps", targets}, {"reference_steps", refs}, {"force_steps", forces}, {"pulls", pulls}};
}
inline void from_json(const Json& j, EventScript& e)
{
    e = {};
    if (auto it = j.find("target_steps"); it != j.end())
        for (const auto& s : *it)
            e.targets.push_back({s.at("t_s").get<double>(), s.at("delta_m").get<double>()});
    if (auto it = j.find("reference_steps"); it != j.end())
        for (const auto& s : *it)
            e.references.push_back({s.at("t_s").get<double>(), s.at("value_m").get<double>()});
    if (auto it = j.find("force_steps"); it != j.end())
        for (const auto& s : *it)
            e.forces.push_back({s.at("t_s").get<double>(), s.at("force_n").get<double>()});
    if (auto it = j.find("pulls"); it != j.end())
        for (const auto& s : *it) {
            PullRelease p;
            p.t = s.at("t_s").get<double>();
            detail::read(s, "ramp_s", p.ramp);
            detail::read(s, "peak_n", p.peak);
            e.pulls.push_back(p);
        }
}

inline void to_json(Json& j, const ServoScenario& s)
{
    j = detail::versioned("relaytune.scenario",
                          {{"camera", s.camera},
                           {"imu", s.imu},
                           {"schedules", {{"with_kf", s.schedules.with_kf}, {"camera_only", s.schedules.camera_only}}},
                           {"plant", {{"model", s.plant.model}, {"mass_kg", s.plant.mass}}},
                           {"sim", s.sim},
                           {"kf", {{"sigma_p", s.kf.sigma_p}, {"sigma_bias", s.kf.sigma_bias}, {"sigma_c", s.kf.sigma_c}}},
                           {"supervisor", s.supervisor},
                           {"events", s.events},
                           {"horizon_s", s.horizon},
                           {"initial_reference_m", s.initial_reference},
                           {"rng_seed", s.rng_seed}});
}
inline void from_json(const Json& j, ServoScenario& s)
{
    detail::check_format(j, "relaytune.scenario");
    detail::read(j, "camera", s.camera);
    detail::read(j, "imu", s.imu);
    if (auto it = j.find("schedules"); it != j.end()) {
        detail::read(*it, "with_kf", s.schedules.with_kf);
        detail::read(*it, "camera_only", s.schedules.camera_only);
    }
    if (auto it = j.find("plant"); it != j.end()) {
        detail::read(*it, "model", s.plant.model);
        detail::read(*it, "mass_kg", s.plant.mass);
    }
    detail::read(j, "sim", s.sim);
    if (auto it = j.find("kf"); it != j.end()) {
        detail::read(*it, "sigma_p", s.kf.sigma_p);
        detail::read(*it, "sigma_bias", s.kf.sigma_bias);
        detail::read(*it, "sigma_c", s.kf.sigma_c);
    }
    detail::read(j, "supervisor", s.supervisor);
    detail::read(j, "events", s.events);
    detail::read(j, "horizon_s", s.horizon);
    detail::read(j, "initial_reference_m", s.initial_reference);
    detail::read(j, "rng_seed", s.rng_seed);
}

inline void to_json(Json& j, const ServoMetrics& m)
{
    j = {{"ise", m.ise},
         {"max_deviation_m", m.max_deviation},
         {"steady_offset_m", m.steady_offset},
         {"overshoot_percent", m.overshoot_percent},
         {"rise_time_s", detail::num(m.rise_time)},
         {"switches", m.switches}};
}

inline Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const Json& j, int indent = 2)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path);
    out << j.dump(indent) << '\n';
    require(static_cast<bool>(out), "write failed: " + path);
}

} // namespace relaytune
