// relaytune command-line front end. Every command writes its artifacts and a
// run_manifest.json into one run directory.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "relaytune/relaytune.hpp"

namespace fs = std::filesystem;
using namespace relaytune;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Bad invocation or missing input artifact; exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ull)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_digest(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hex(fnv1a(bytes));
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Effective configuration of one command: the --config file with set flags written over it.
struct Command {
    std::string name;
    CLI::App* app = nullptr;
    std::string config_path;
    std::string out_dir;
    std::vector<std::pair<CLI::Option*, std::function<void(Json&)>>> bindings;
    Json cfg = Json::object();

    template <class T>
    CLI::Option* option(const std::string& flags, const std::string& key, const std::string& help)
    {
        auto value = std::make_shared<T>();
        CLI::Option* o = app->add_option(flags, *value, help);
        bindings.emplace_back(o, [value, key](Json& j) { j[key] = *value; });
        return o;
    }

    CLI::Option* flag(const std::string& flags, const std::string& key, const std::string& help)
    {
        auto value = std::make_shared<bool>(false);
        CLI::Option* o = app->add_flag(flags, *value, help);
        bindings.emplace_back(o, [value, key](Json& j) { j[key] = *value; });
        return o;
    }

    void resolve()
    {
        if (!config_path.empty()) {
            try {
                cfg = read_json_file(config_path);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            if (!cfg.is_object())
                throw UsageError(config_path + ": config must be a JSON object");
        }
        for (auto& [o, apply] : bindings)
            if (o->count() > 0)
                apply(cfg);
    }

    [[nodiscard]] bool has(const std::string& key) const { return cfg.contains(key) && !cfg.at(key).is_null(); }

    template <class T>
    T get(const std::string& key, T fallback) const
    {
        if (!has(key))
            return fallback;
        try {
            return cfg.at(key).get<T>();
        } catch (const Json::exception& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }

    template <class T>
    T need(const std::string& key, const std::string& hint) const
    {
        if (!has(key))
            throw UsageError(name + ": missing '" + key + "' (" + hint + ")");
        return get<T>(key, T{});
    }

    std::uint64_t seed() const
    {
        return need<std::uint64_t>("seed", "pass --seed N; stochastic steps need an explicit seed");
    }
};

/// Run directory with its manifest; artifacts are registered as they are written.
class Run {
public:
    Run(const Command& c, const std::vector<std::string>& argv) : cmd_(c), argv_(argv), started_(utc_now())
    {
        Json keyed = {{"command", c.name}, {"config", c.cfg}};
        digest_ = hex(fnv1a(keyed.dump()));
        if (!c.out_dir.empty()) {
            dir_ = c.out_dir;
        } else {
            const char* root = std::getenv("RELAYTUNE_RUN_ROOT");
            dir_ = fs::path(root && *root ? root : "runs") / (c.name + "-" + digest_.substr(0, 8));
        }
        fs::create_directories(dir_);
    }

    [[nodiscard]] fs::path path(const std::string& file) const { return dir_ / file; }
    [[nodiscard]] const fs::path& dir() const { return dir_; }

    void seed(const std::string& what, std::uint64_t v) { seeds_[what] = v; }

    void artifact(const fs::path& p)
    {
        artifacts_.push_back({{"path", fs::relative(fs::absolute(p), fs::absolute(dir_)).generic_string()},
                              {"digest", file_digest(p)},
                              {"bytes", fs::file_size(p)}});
    }

    void write(const std::string& file, const Json& j, int indent = 2)
    {
        write_json_file(path(file).string(), j, indent);
        artifact(path(file));
    }
    void write(const std::string& file, const CsvTable& t)
    {
        write_csv(path(file).string(), t);
        artifact(path(file));
    }
    void write(const std::string& file, const std::string& text)
    {
        std::ofstream out(path(file), std::ios::binary);
        out << text;
        out.close();
        require(static_cast<bool>(out), "write failed: " + path(file).string());
        artifact(path(file));
    }

    void finish(int status)
    {
        Json m = {{"format", "relaytune.manifest"},
                  {"format_version", kFormatVersion},
                  {"tool_version", kVersion},
                  {"command", cmd_.name},
                  {"args", argv_},
                  {"config", cmd_.cfg},
                  {"config_digest", digest_},
                  {"seeds", seeds_},
                  {"artifacts", artifacts_},
                  {"exit_status", status},
                  {"started_utc", started_},
                  {"finished_utc", utc_now()}};
        write_json_file(path("run_manifest.json").string(), m);
        std::cerr << "run directory: " << dir_.string() << '\n';
    }

private:
    const Command& cmd_;
    std::vector<std::string> argv_;
    std::string started_;
    std::string digest_;
    fs::path dir_;
    Json seeds_ = Json::object();
    Json artifacts_ = Json::array();
};

void progress(const std::string& s) { std::cerr << s << '\n'; }

GridBuild load_grid(const Command& c, const std::string& key = "grid")
{
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const auto p = c.need<std::string>(key, "pass --" + flag + " <grid.json> produced by `relaytune grid`");
    if (!fs::exists(p))
        throw UsageError(p + " not found; run `relaytune grid` first");
    try {
        return grid_from_json(read_json_file(p));
    } catch (const std::exception& e) {
        throw UsageError(p + ": " + e.what());
    }
}

template <class T>
T load_artifact(const std::string& p, const std::string& producer, T (*load)(const Json&))
{
    if (!fs::exists(p))
        throw UsageError(p + " not found; run `relaytune " + producer + "` first");
    try {
        return load(read_json_file(p));
    } catch (const std::exception& e) {
        throw UsageError(p + ": " + e.what());
    }
}

TransferFunctionModel model_of(const Json& j) { return j.get<TransferFunctionModel>(); }

/// Inner-loop plant from --plant <json> or the (t_prop, t1, tau, gain) flags.
TransferFunctionModel plant_from(const Command& c, LoopKind kind)
{
    if (c.has("plant")) {
        const auto p = c.get<std::string>("plant", "");
        return load_artifact<TransferFunctionModel>(p, "tune --help", model_of);
    }
    const double k = c.get("gain", 1.0);
    if (kind == LoopKind::Lateral)
        return {k, {c.need<double>("t2", "--t2 <s>")}, c.need<double>("tau", "--tau <s>"), 1};
    return TransferFunctionModel::inner(k, c.need<double>("t_prop", "--t-prop <s> or --plant <model.json>"),
                                        c.need<double>("t1", "--t1 <s>"), c.need<double>("tau", "--tau <s>"));
}

void add_plant_flags(Command& c)
{
    c.option<std::string>("--plant", "plant", "plant model JSON");
    c.option<double>("--t-prop", "t_prop", "propulsion time constant (s)");
    c.option<double>("--t1", "t1", "body time constant (s)");
    c.option<double>("--t2", "t2", "lateral time constant (s)");
    c.option<double>("--tau", "tau", "delay (s)");
    c.option<double>("--gain", "gain", "process gain");
}

DatasetOptions dataset_options(const Command& c)
{
    DatasetOptions d;
    d.relay = GridOptions{}.relay_test;
    d.features.harmonics = c.get("harmonics", d.features.harmonics);
    d.augmentation.examples_per_class = c.get("examples_per_class", d.augmentation.examples_per_class);
    d.augmentation.sigma_max = c.get("sigma_max", d.augmentation.sigma_max);
    d.augmentation.bias_max = c.get("bias_max", d.augmentation.bias_max);
    return d;
}

// ---- commands

int cmd_grid(Command& c, Run& run)
{
    const auto kind = loop_kind_from_string(c.get<std::string>("loop", "altitude"));
    GridRanges r = kind == LoopKind::Attitude ? GridRanges::attitude() : GridRanges::altitude();
    if (c.has("ranges"))
        r = c.cfg.at("ranges").get<GridRanges>();
    r.kind = kind;
    if (kind == LoopKind::Lateral) {
        r.tau = GridRanges::lateral({}).tau;
        if (c.has("ranges"))
            r.tau = c.cfg.at("ranges").at("tau").get<AxisRange>();
        if (c.has("inner_grid")) {
            const GridBuild inner = load_grid(c, "inner_grid");
            const auto k = c.need<std::size_t>("inner_class", "--inner-class <index> into the inner grid");
            if (k >= inner.grid.size())
                throw UsageError("inner class " + std::to_string(k) + " outside the inner grid");
            r.inner = InnerLoop{inner.grid.classes[k].model, inner.table.entries[k].gains};
        } else if (c.has("inner")) {
            r.inner = c.cfg.at("inner").get<InnerLoop>();
        } else {
            throw UsageError("lateral grid needs its tuned inner loop: pass --inner-grid <grid.json> --inner-class <i> "
                             "or an \"inner\" object in --config");
        }
    }
    if (c.has("points")) {
        const int n = c.get("points", 8);
        r.t_prop.points = r.t1.points = r.t2.points = n;
    }
    if (c.has("tau_points"))
        r.tau.points = c.get("tau_points", 10);
    GridOptions o;
    o.target_j = c.get("target_j", o.target_j);
    o.progress = progress;
    const GridBuild g = build_grid(r, o);
    run.write("grid.json", grid_json(g.grid, g.table, g.candidates));
    run.write("j_matrix.csv", j_table(g.grid));
    std::cout << to_string(kind) << " grid: " << g.grid.size() << " classes from " << g.candidates
              << " candidates\n";
    return 0;
}

int cmd_gen_data(Command& c, Run& run)
{
    const GridBuild g = load_grid(c);
    DatasetOptions d = dataset_options(c);
    d.augmentation.seed = c.seed();
    run.seed("augmentation", d.augmentation.seed);
    const Dataset ds = generate_dataset(g.grid, g.table, d);
    run.write("dataset.csv", dataset_table(ds));
    run.write("dataset.meta.json", Json{{"format", "relaytune.dataset"},
                                        {"format_version", kFormatVersion},
                                        {"features", d.features},
                                        {"augmentation", d.augmentation},
                                        {"failed_classes", ds.failed}});
    std::cout << ds.examples.size() << " examples, " << ds.failed.size() << " classes without a cycle\n";
    return 0;
}

int cmd_train(Command& c, Run& run)
{
    const auto data = c.need<std::string>("data", "pass --data <dataset.csv> produced by `relaytune gen-data`");
    if (!fs::exists(data))
        throw UsageError(data + " not found; run `relaytune gen-data --grid <grid.json> --seed N` first");
    const GridBuild g = load_grid(c);
    Dataset ds;
    try {
        ds = dataset_from_table(read_csv(data));
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    TrainConfig tc;
    if (c.has("train"))
        tc = c.cfg.at("train").get<TrainConfig>();
    tc.rng_seed = c.seed();
    tc.epochs = c.get("epochs", tc.epochs);
    if (c.has("hidden"))
        tc.hidden = c.get<std::vector<int>>("hidden", {});
    DatasetOptions d = dataset_options(c);
    const fs::path meta = fs::path(data).replace_extension(".meta.json");
    if (fs::exists(meta)) {
        const Json m = read_json_file(meta.string());
        d.features = m.at("features").get<FeatureOptions>();
        d.augmentation = m.at("augmentation").get<AugmentationSpec>();
    }
    tc.features = d.features;
    tc.augmentation = d.augmentation;
    require(ds.feature_size == d.features.size(),
            "dataset has " + std::to_string(ds.feature_size) + " features, encoding expects " +
                std::to_string(d.features.size()));
    run.seed("train", tc.rng_seed);

    std::vector<TrainLogRow> log;
    TrainHooks hooks;
    hooks.log = &log;
    hooks.on_epoch = [](const TrainLogRow& r) {
        std::cerr << "epoch " << r.epoch << " loss " << r.loss << " accuracy " << r.accuracy << '\n';
    };
    std::unique_ptr<ReferenceRuns> refs;
    if (c.get("fresh", false)) {
        refs = std::make_unique<ReferenceRuns>(simulate_references(g.grid, g.table, d));
        hooks.refresh = [&](int epoch, std::vector<TrainingExample>& ex) {
            ex = augment(*refs, d, tc.rng_seed * 1000003ull + static_cast<std::uint64_t>(epoch)).examples;
        };
    }
    const MlpModel m = train(ds.examples, g.grid, tc, hooks);
    run.write("model.json", model_json(m), -1);
    run.write("train_log.csv", train_log_table(log));
    if (!log.empty())
        std::cout << "final accuracy " << log.back().accuracy << " after " << log.size() << " epochs\n";
    return 0;
}

int cmd_identify(Command& c, Run& run)
{
    const GridBuild g = load_grid(c);
    const auto mp = c.need<std::string>("model", "pass --model <model.json> produced by `relaytune train`");
    const Identifier id{g.grid.ranges, g.table, load_artifact<MlpModel>(mp, "train", model_from_json)};
    IdentifyOptions io;
    io.relay = GridOptions{}.relay_test;
    io.sigma = c.get("sigma", 0.0);
    io.bias = c.get("bias", 0.0);
    io.seed = c.seed();
    run.seed("identify", io.seed);
    const TransferFunctionModel plant = plant_from(c, g.grid.kind);

    Identification r;
    if (g.grid.kind == LoopKind::Lateral) {
        require(g.grid.ranges.inner.has_value(), "lateral grid artifact carries no inner loop");
        r = identify(CascadePlant{*g.grid.ranges.inner, plant, io.sim}, id, io);
    } else {
        r = identify(plant, id, io);
    }
    const std::size_t k = r.classification.label;
    Json out = {{"format", "relaytune.identification"},
                {"format_version", kFormatVersion},
                {"plant", plant},
                {"class", k},
                {"class_params", g.grid.classes[k].params},
                {"score", r.classification.probabilities(static_cast<Eigen::Index>(k))},
                {"cycle", r.cycle},
                {"gain_ratio", r.gain_ratio},
                {"gains", r.gains}};
    run.write("identification.json", out);
    run.write("relay.csv", relay_table(r.run.trace));
    std::cout << "class " << k << ", period " << r.cycle.period << " s, gains kp " << r.gains.kp << " kd "
              << r.gains.kd << '\n';
    return 0;
}

int cmd_tune(Command& c, Run& run)
{
    const TransferFunctionModel plant = plant_from(c, LoopKind::Altitude);
    TuningSpec spec;
    spec.min_phase_margin = c.get("min_phase_margin", spec.min_phase_margin);
    spec.budget = c.get("budget", spec.budget);
    spec.step_amplitude = c.get("step_amplitude", spec.step_amplitude);
    SimulationConfig sim;
    if (c.has("sim"))
        sim = c.cfg.at("sim").get<SimulationConfig>();
    const TuningResult t = optimize_pd(plant, spec, sim);
    const StepResult step = closed_loop_step(plant, t.gains, spec.step_amplitude, sim);
    const StepMetrics m = step_metrics(step.traces);
    run.write("tuning.json", Json{{"format", "relaytune.tuning"},
                                  {"format_version", kFormatVersion},
                                  {"plant", plant},
                                  {"spec", spec},
                                  {"gains", t.gains},
                                  {"ise", t.ise},
                                  {"phase_margin_deg", t.phase_margin},
                                  {"evaluations", t.evaluations},
                                  {"overshoot_percent", m.overshoot_percent},
                                  {"rise_time_s", detail::num(m.rise_time)}});
    run.write("step.csv", traces_table(step.traces));
    std::cout << "kp " << t.gains.kp << " kd " << t.gains.kd << ", ISE " << t.ise << ", PM " << t.phase_margin
              << " deg\n";
    return 0;
}

ServoScenario load_scenario(const std::string& name)
{
    const auto& presets = scenario_preset_names();
    if (std::find(presets.begin(), presets.end(), name) != presets.end())
        return scenario_preset(name);
    if (!fs::exists(name)) {
        std::string list;
        for (const auto& p : presets)
            list += " " + p;
        throw UsageError("scenario '" + name + "' is neither a preset nor a file; presets:" + list);
    }
    try {
        const Json j = read_json_file(name);
        ServoScenario s = j.contains("preset") ? scenario_preset(j.at("preset").get<std::string>()) : reference_scenario();
        from_json(j, s);
        return s;
    } catch (const std::exception& e) {
        throw UsageError(name + ": " + e.what());
    }
}

int cmd_simulate(Command& c, Run& run)
{
    ServoScenario s = load_scenario(c.need<std::string>("scenario", "--scenario <preset|file.json>"));
    s.rng_seed = c.seed();
    s.horizon = c.get("horizon", s.horizon);
    run.seed("sensors", s.rng_seed);
    const ServoTraces tr = run_scenario(s);
    run.write("scenario.json", Json(s));
    run.write("traces.csv", servo_table(tr));
    Json metrics = {{"whole_run", servo_metrics(tr)},
                    {"switch_to_camera_s", tr.switch_to_camera},
                    {"switch_to_kf_s", tr.switch_to_kf},
                    {"diverged", tr.diverged},
                    {"diagnostic", tr.diagnostic}};
    run.write("metrics.json", metrics);
    const auto m = servo_metrics(tr);
    std::cout << "ISE " << m.ise << ", max deviation " << m.max_deviation << " m, overshoot " << m.overshoot_percent
              << "%, schedule switches " << m.switches << (tr.diverged ? ", DIVERGED" : "") << '\n';
    return tr.diverged ? 1 : 0;
}

std::vector<int> suite_checks(const std::string& suite)
{
    if (suite == "quick")
        return {1, 2, 4, 5, 8, 10, 11};
    if (suite == "tables" || suite == "full")
        return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    throw UsageError("unknown suite '" + suite + "' (quick, tables, full)");
}

Json check_json(const CheckResult& r, bool ran)
{
    return {{"id", r.id},
            {"name", r.name},
            {"expected", r.expected},
            {"computed", ran ? detail::num(r.computed) : Json(nullptr)},
            {"tolerance", r.tolerance},
            {"status", !ran ? "skipped" : r.pass ? "pass" : "fail"},
            {"detail", r.detail},
            {"seconds", r.seconds}};
}

int cmd_reproduce(Command& c, Run& run)
{
    const auto suite = c.get<std::string>("suite", "quick");
    const auto ids = suite_checks(suite);
    ReproOptions o;
    o.seed = c.get<std::uint64_t>("seed", 1);
    o.progress = progress;
    if (suite == "full")
        o.e2e_trials = 300;
    o.e2e_trials = c.get("trials", o.e2e_trials);
    o.train.epochs = c.get("epochs", o.train.epochs);
    run.seed("reproduce", o.seed);
    ReproContext ctx(o);
    if (c.has("altitude_grid"))
        ctx.set_altitude(load_grid(c, "altitude_grid"));
    if (c.has("attitude_grid"))
        ctx.set_attitude(load_grid(c, "attitude_grid"));

    Json checks = Json::array();
    std::string text;
    int failed = 0;
    for (const auto& [id, fn] : all_checks()) {
        (void)fn;
        const bool ran = std::find(ids.begin(), ids.end(), id) != ids.end();
        CheckResult r;
        if (ran) {
            r = run_check(id, ctx);
        } else {
            r = start_check(id, "", "", "");
            r.name = "check " + std::to_string(id);
        }
        failed += ran && !r.pass;
        checks.push_back(check_json(r, ran));
        const std::string line = std::string(!ran ? "SKIP" : r.pass ? "PASS" : "FAIL") + " [" + std::to_string(id) +
                                 "] " + r.name + (ran ? ": " + r.detail : "");
        std::cout << line << std::endl;
        text += line + '\n';
    }
    run.write("report.json", Json{{"format", "relaytune.report"},
                                  {"format_version", kFormatVersion},
                                  {"suite", suite},
                                  {"seed", o.seed},
                                  {"checks", checks},
                                  {"failed", failed}});
    run.write("report.txt", text);
    return failed ? 1 : 0;
}

/// Shaded [start, end) windows where `flag` is nonzero.
std::vector<std::pair<double, double>> windows(const std::vector<double>& t, const std::vector<double>& flag)
{
    std::vector<std::pair<double, double>> w;
    const double dt = t.size() > 1 ? t[1] - t[0] : 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(flag[i] > 0.5))
            continue;
        const double start = t[i];
        while (i + 1 < t.size() && flag[i + 1] > 0.5)
            ++i;
        w.emplace_back(start, t[i] + dt);
    }
    return w;
}

PlotSpec plot_spec(const CsvTable& t)
{
    require(t.has("t"), "plot: CSV needs a 't' column");
    PlotSpec s;
    s.t = t.values("t");
    const auto series = [&](const std::string& col, const std::string& label = "") {
        return PlotSeries{label.empty() ? col : label, t.values(col)};
    };
    if (t.has("inhibited")) {
        PlotPanel e{"relay test", "error", {series("e"), series("b_1"), series("b_2")}, windows(s.t, t.values("inhibited"))};
        PlotPanel u{"relay output", "u", {series("u")}, e.shaded};
        s.panels = {e, u};
    } else if (t.has("schedule")) {
        std::vector<double> sched = t.values("schedule");
        for (double& v : sched)
            v = v > 1.5 ? 1.0 : 0.0;
        const auto camera_only = windows(s.t, sched);
        s.panels = {{"position", "m",
                     {series("target"), series("truth"), series("kf_position", "filter"),
                      series("measurement", "camera")},
                     camera_only},
                    {"servo error", "m", {series("error")}, camera_only},
                    {"control and disturbance", "", {series("control"), series("force", "force (N)")}, camera_only}};
    } else if (t.has("output") && t.has("reference")) {
        s.panels = {{"step response", "output", {series("reference"), series("output")}, {}},
                    {"control", "u", {series("control")}, {}}};
    } else {
        PlotPanel p{"traces", "", {}, {}};
        for (const auto& h : t.header)
            if (h != "t")
                p.series.push_back(series(h));
        s.panels = {p};
    }
    return s;
}

int cmd_plot(Command& c, Run& run)
{
    const auto in = c.need<std::string>("input", "--input <traces.csv>");
    CsvTable t;
    try {
        t = read_csv(in);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const std::string svg = render_svg(plot_spec(t));
    if (c.has("out")) {
        const fs::path out = c.get<std::string>("out", "");
        if (out.has_parent_path())
            fs::create_directories(out.parent_path());
        std::ofstream f(out, std::ios::binary);
        f << svg;
        f.close();
        require(static_cast<bool>(f), "write failed: " + out.string());
        run.artifact(out);
    } else {
        run.write(fs::path(in).stem().string() + ".svg", svg);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Relay-feedback identification and PD tuning toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Command>> cmds;
    const auto make = [&](const std::string& name, const std::string& help) -> Command& {
        auto c = std::make_unique<Command>();
        c->name = name;
        c->app = app.add_subcommand(name, help);
        c->app->add_option("--config", c->config_path, "JSON config; flags override its keys");
        c->app->add_option("--out-dir", c->out_dir, "run directory (default $RELAYTUNE_RUN_ROOT or ./runs)");
        cmds.push_back(std::move(c));
        return *cmds.back();
    };

    Command& grid = make("grid", "build the process grid and controller table of one loop");
    grid.option<std::string>("--loop", "loop", "altitude, attitude or lateral")
        ->check(CLI::IsMember({"altitude", "attitude", "lateral"}));
    grid.option<double>("--target-j", "target_j", "class spacing in relative sensitivity (percent)");
    grid.option<int>("--points", "points", "lattice points per time-constant axis");
    grid.option<int>("--tau-points", "tau_points", "lattice points on the delay axis");
    grid.option<std::string>("--inner-grid", "inner_grid", "inner grid JSON (lateral loop)");
    grid.option<std::size_t>("--inner-class", "inner_class", "class index in the inner grid (lateral loop)");

    Command& gen = make("gen-data", "simulate and augment classifier training data");
    gen.option<std::string>("--grid", "grid", "grid JSON");
    gen.option<std::uint64_t>("--seed", "seed", "augmentation seed");
    gen.option<int>("--examples-per-class", "examples_per_class", "augmented examples per class");
    gen.option<double>("--sigma-max", "sigma_max", "white noise bound in units of a_0");
    gen.option<double>("--bias-max", "bias_max", "bias bound in units of a_0");
    gen.option<int>("--harmonics", "harmonics", "harmonics kept in the waveform encoding");

    Command& train = make("train", "train the classifier");
    train.option<std::string>("--grid", "grid", "grid JSON");
    train.option<std::string>("--data", "data", "dataset CSV from gen-data");
    train.option<std::uint64_t>("--seed", "seed", "training seed");
    train.option<int>("--epochs", "epochs", "training epochs");
    train.option<std::vector<int>>("--hidden", "hidden", "hidden layer widths, comma separated")->delimiter(',');
    train.flag("--fresh", "fresh", "draw new augmentation every epoch");

    Command& ident = make("identify", "relay test, classify and scale the gains of one plant");
    ident.option<std::string>("--grid", "grid", "grid JSON");
    ident.option<std::string>("--model", "model", "classifier JSON from train");
    ident.option<std::uint64_t>("--seed", "seed", "measurement corruption seed");
    ident.option<double>("--sigma", "sigma", "white measurement noise std");
    ident.option<double>("--bias", "bias", "measurement bias");
    add_plant_flags(ident);

    Command& tune = make("tune", "ISE-optimal PD gains under the phase-margin floor");
    add_plant_flags(tune);
    tune.option<double>("--min-pm", "min_phase_margin", "phase margin floor (deg)");
    tune.option<int>("--budget", "budget", "optimizer evaluation budget");

    Command& sim = make("simulate", "run a servo scenario");
    sim.option<std::string>("--scenario", "scenario", "preset name or scenario JSON");
    sim.option<std::uint64_t>("--seed", "seed", "sensor noise seed");
    sim.option<double>("--horizon", "horizon", "simulated time (s)");

    Command& rep = make("reproduce", "run the acceptance checks");
    rep.option<std::string>("--suite", "suite", "quick, tables or full")->check(CLI::IsMember({"quick", "tables", "full"}));
    rep.option<std::uint64_t>("--seed", "seed", "check seed (default 1)");
    rep.option<int>("--trials", "trials", "end-to-end identification trials");
    rep.option<int>("--epochs", "epochs", "classifier training epochs");
    rep.option<std::string>("--altitude-grid", "altitude_grid", "reuse a built altitude grid");
    rep.option<std::string>("--attitude-grid", "attitude_grid", "reuse a built attitude grid");

    Command& plot = make("plot", "render a traces CSV as SVG");
    plot.option<std::string>("--input", "input", "traces CSV");
    plot.option<std::string>("--out", "out", "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::map<std::string, int (*)(Command&, Run&)> handlers{
        {"grid", cmd_grid},         {"gen-data", cmd_gen_data}, {"train", cmd_train},         {"identify", cmd_identify},
        {"tune", cmd_tune},         {"simulate", cmd_simulate}, {"reproduce", cmd_reproduce}, {"plot", cmd_plot}};
    const std::vector<std::string> args(argv + 1, argv + argc);
    for (auto& c : cmds) {
        if (!c->app->parsed())
            continue;
        try {
            c->resolve();
            Run run(*c, args);
            int status = 1;
            try {
                status = handlers.at(c->name)(*c, run);
            } catch (const UsageError&) {
                run.finish(2);
                throw;
            } catch (...) {
                run.finish(1);
                throw;
            }
            run.finish(status);
            return status;
        } catch (const UsageError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}
