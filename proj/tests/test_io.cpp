#include <gtest/gtest.h>

#include <sstream>

#include "relaytune/io/csv.hpp"
#include "relaytune/io/json.hpp"
#include "relaytune/io/svg.hpp"
#include "relaytune/servo/presets.hpp"

using namespace relaytune;

namespace {

template <class T>
T round_trip(const T& v)
{
    const Json j = v;
    return Json::parse(j.dump()).get<T>();
}

MlpModel tiny_model()
{
    MlpModel m;
    m.sizes = {4, 3, 2};
    m.weights = {Eigen::MatrixXf::Random(3, 4), Eigen::MatrixXf::Random(2, 3)};
    m.biases = {Eigen::VectorXf::Random(3), Eigen::VectorXf::Random(2)};
    m.input_mean = Eigen::VectorXf::Random(4);
    m.input_scale = Eigen::VectorXf::Constant(4, 2.0f);
    m.features.samples = 2;
    m.label_weights = Eigen::MatrixXd::Identity(2, 2);
    return m;
}

PlotSpec sample_plot()
{
    PlotSpec s;
    for (int i = 0; i < 50; ++i)
        s.t.push_back(0.01 * i);
    PlotPanel p;
    p.title = "error & <control>";
    p.series.push_back({"e", std::vector<double>(50, 0.5)});
    p.series.push_back({"missing", std::vector<double>(50, std::nan(""))});
    p.shaded.push_back({0.1, 0.2});
    s.panels.push_back(p);
    return s;
}

} // namespace

TEST(Json, ModelAndGainsRoundTrip)
{
    const auto m = TransferFunctionModel::inner(2.5, 0.3, 0.2, 0.0128);
    const auto back = round_trip(m);
    EXPECT_EQ(back.gain, m.gain);
    EXPECT_EQ(back.time_constants, m.time_constants);
    EXPECT_EQ(back.delay, m.delay);
    EXPECT_EQ(back.integrator_order, m.integrator_order);
    const PdGains g{1.1766, 0.3143};
    EXPECT_EQ(round_trip(g), g);
}

TEST(Json, ConfigsRoundTrip)
{
    RelayTestConfig rt;
    rt.relay = {{0.7, -0.6}, 0.012, 0.003};
    rt.noise = {0.01, 100.0, 0.5};
    rt.horizon = 17.0;
    const auto b = round_trip(rt);
    EXPECT_EQ(b.relay.base.h, 0.7);
    EXPECT_EQ(b.relay.base.beta, -0.6);
    EXPECT_EQ(b.relay.tau_obs, 0.012);
    EXPECT_EQ(b.relay.a_n, 0.003);
    EXPECT_EQ(b.noise.amplitude, 0.01);
    EXPECT_EQ(b.horizon, 17.0);

    TrainConfig tc;
    tc.hidden = {12, 5};
    tc.epochs = 7;
    tc.loss = TrainLoss::ModifiedSoftmax;
    const auto t = round_trip(tc);
    EXPECT_EQ(t.hidden, tc.hidden);
    EXPECT_EQ(t.epochs, 7);
    EXPECT_EQ(t.loss, TrainLoss::ModifiedSoftmax);
}

TEST(Json, ScenarioRoundTrip)
{
    const auto s = scenario_preset("pull_release");
    const auto b = round_trip(s);
    EXPECT_EQ(b.horizon, s.horizon);
    ASSERT_EQ(b.events.pulls.size(), 1u);
    EXPECT_EQ(b.events.pulls[0].peak, s.events.pulls[0].peak);
    EXPECT_EQ(b.camera.rate, s.camera.rate);
    EXPECT_EQ(b.schedules.with_kf, s.schedules.with_kf);
    EXPECT_EQ(run_scenario(b).truth, run_scenario(s).truth);
}

TEST(Json, GridRoundTripKeepsInfiniteSensitivities)
{
    GridBuild b;
    b.grid.classes.push_back({{0.1, 0.5, 0.01}, TransferFunctionModel::inner(2.0, 0.1, 0.5, 0.01), 1.0});
    b.grid.classes.push_back({{0.3, 0.5, 0.01}, TransferFunctionModel::inner(3.0, 0.3, 0.5, 0.01), 1.0});
    b.grid.j = {{0.0, kInf}, {12.5, 0.0}};
    b.table.entries.resize(2);
    b.table.entries[0].gains = {1.0, 0.2};
    b.table.entries[1].gains = {0.5, 0.1};
    const auto back = grid_from_json(Json::parse(grid_json(b.grid, b.table, 8).dump()));
    ASSERT_EQ(back.grid.size(), 2u);
    EXPECT_EQ(back.grid.j[0][1], kInf);
    EXPECT_EQ(back.grid.j[1][0], 12.5);
    EXPECT_EQ(back.table.entries[1].gains, b.table.entries[1].gains);
    EXPECT_EQ(back.candidates, 8);
}

TEST(Json, RejectsForeignFormat)
{
    Json j = grid_json({}, {});
    j["format"] = "something.else";
    EXPECT_THROW(grid_from_json(j), Error);
}

TEST(Json, MlpModelRoundTripGivesTheSameLogits)
{
    const auto m = tiny_model();
    const auto back = model_from_json(Json::parse(model_json(m).dump()));
    const std::vector<double> x{0.1, -0.2, 0.3, 0.4};
    EXPECT_LT((back.logits(x) - m.logits(x)).norm(), 1e-6);
    EXPECT_EQ(back.sizes, m.sizes);
}

TEST(Csv, WriteThenParse)
{
    CsvTable t;
    t.header = {"t", "value"};
    t.rows = {{0.0, 1.25}, {0.1, kInf}, {0.2, std::nan("")}, {0.3, 1.0 / 3.0}};
    std::stringstream ss;
    write_csv(ss, t);
    const auto back = parse_csv(ss);
    ASSERT_EQ(back.header, t.header);
    ASSERT_EQ(back.rows.size(), 4u);
    EXPECT_EQ(back.rows[1][1], kInf);
    EXPECT_TRUE(std::isnan(back.rows[2][1]));
    // ten significant digits
    EXPECT_NEAR(back.rows[3][1], 1.0 / 3.0, 1e-10);
    EXPECT_EQ(back.values("t").size(), 4u);
    EXPECT_THROW(static_cast<void>(back.column("nope")), Error);
}

TEST(Csv, ErrorsCarryTheLineNumber)
{
    std::stringstream bad_count("a,b\n1,2\n3\n");
    try {
        parse_csv(bad_count, "x.csv");
        FAIL() << "no error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("x.csv:3"), std::string::npos) << e.what();
    }
    std::stringstream bad_num("a,b\n1,2\n\n4,zz\n");
    try {
        parse_csv(bad_num, "y.csv");
        FAIL() << "no error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("y.csv:4"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
    }
    std::stringstream empty("");
    EXPECT_THROW(parse_csv(empty), Error);
}

TEST(Csv, DatasetRoundTrip)
{
    Dataset d;
    d.feature_size = 3;
    d.examples = {{{0.1, 0.2, 0.3}, 0}, {{-1.0, 2.0, 0.5}, 4}};
    std::stringstream ss;
    write_csv(ss, dataset_table(d));
    const auto back = dataset_from_table(parse_csv(ss));
    ASSERT_EQ(back.examples.size(), 2u);
    EXPECT_EQ(back.examples[1].label, 4u);
    EXPECT_EQ(back.feature_size, 3u);
    EXPECT_NEAR(back.examples[1].features[1], 2.0, 1e-12);
}

TEST(Csv, TraceTablesHaveTheirColumns)
{
    const auto tr = run_scenario(scenario_preset("stationary"));
    const auto t = servo_table(tr);
    EXPECT_TRUE(t.has("schedule"));
    EXPECT_TRUE(t.has("truth"));
    EXPECT_EQ(t.rows.size(), tr.size());
}

TEST(Svg, RenderingIsDeterministic)
{
    const auto a = render_svg(sample_plot());
    EXPECT_EQ(a, render_svg(sample_plot()));
    EXPECT_EQ(a.rfind("<svg", 0), 0u);
    EXPECT_NE(a.find("</svg>"), std::string::npos);
}

TEST(Svg, EscapesTextAndOmitsEmptySeries)
{
    const auto s = render_svg(sample_plot());
    EXPECT_NE(s.find("error &amp; &lt;control&gt;"), std::string::npos);
    EXPECT_EQ(s.find("missing"), std::string::npos);
    EXPECT_NE(s.find(">e<"), std::string::npos);
}

TEST(Svg, RejectsEmptySpecs)
{
    EXPECT_THROW(render_svg(PlotSpec{}), Error);
    PlotSpec s;
    s.t = {0.0, 1.0};
    EXPECT_THROW(render_svg(s), Error);
}
