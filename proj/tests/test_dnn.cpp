#include <gtest/gtest.h>

#include <random>

#include "relaytune/dnn/identify.hpp"

using namespace relaytune;

namespace {

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = u(rng);
    return v;
}

// synthetic cycle: fundamental plus a third harmonic, `shift` samples into the period
LimitCycle synthetic_cycle(double amp, double bias, double period, std::size_t shift = 0, std::size_t n = 256)
{
    LimitCycle c;
    c.amplitude = amp;
    c.harmonic_amplitude = amp;
    c.period = period;
    c.omega = 2.0 * kPi / period;
    c.bias = bias;
    for (std::size_t i = 0; i < n; ++i) {
        const double ph = 2.0 * kPi * static_cast<double>(i + shift) / static_cast<double>(n);
        c.error_wave.push_back(bias + amp * (std::sin(ph) + 0.2 * std::sin(3.0 * ph + 0.4)));
        c.control_wave.push_back(std::sin(ph) >= 0.0 ? 1.0 : -1.0);
    }
    return c;
}

struct SmallPipeline {
    GridBuild grid;
    ReferenceRuns refs;
    DatasetOptions data;
    Identifier id;
};

const SmallPipeline& small_pipeline()
{
    static const SmallPipeline p = [] {
        SmallPipeline s;
        GridRanges r;
        r.t_prop = {0.05, 0.3, 2};
        r.t1 = {0.5, 0.5, 1};
        r.tau = {0.005, 0.05, 2, 0.01};
        GridOptions opt;
        opt.target_j = 5.0;
        s.grid = build_grid(r, opt);
        s.data.relay = opt.relay_test;
        s.data.sim = opt.sim;
        s.refs = simulate_references(s.grid.grid, s.grid.table, s.data);
        TrainConfig tc;
        tc.hidden = {64, 32};
        tc.epochs = 40;
        tc.augmentation.examples_per_class = 40;
        tc.augmentation.sigma_max = 0.05;
        tc.augmentation.bias_max = 0.05;
        s.id = {r, s.grid.table, train_augmented(s.refs, s.grid.grid, s.data, tc)};
        return s;
    }();
    return p;
}

} // namespace

TEST(Softmax, UnitWeightsGiveThePlainSoftmax)
{
    std::mt19937_64 rng(2);
    const auto a = random_vector(rng, 7, -3.0, 3.0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(7);
    const auto p = modified_softmax(a, ones);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_LT((p - softmax(a)).norm(), 1e-12);
    const Eigen::VectorXd shifted = (a.array() + 100.0).matrix();
    EXPECT_LT((softmax(shifted) - p).norm(), 1e-12);
}

TEST(Softmax, LossIsMinusLogOfTheLabelProbability)
{
    std::mt19937_64 rng(4);
    const auto a = random_vector(rng, 5, -2.0, 2.0);
    const auto j = random_vector(rng, 5, 0.0, 3.0);
    const auto p = modified_softmax(a, j);
    for (std::size_t l = 0; l < 5; ++l)
        EXPECT_NEAR(modified_softmax_loss(a, j, l), -std::log(p(static_cast<Eigen::Index>(l))), 1e-10);
    EXPECT_THROW(modified_softmax_loss(a, j, 5), Error);
}

TEST(Softmax, GradientMatchesCentralDifferences)
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_vector(rng, 6, -3.0, 3.0);
        const auto j = random_vector(rng, 6, 0.0, 3.0);
        const std::size_t label = static_cast<std::size_t>(trial % 6);
        const auto g = modified_softmax_gradient(a, j, label);
        for (Eigen::Index i = 0; i < 6; ++i) {
            Eigen::VectorXd hi = a, lo = a;
            hi(i) += 1e-6;
            lo(i) -= 1e-6;
            const double fd = (modified_softmax_loss(hi, j, label) - modified_softmax_loss(lo, j, label)) / 2e-6;
            EXPECT_NEAR(g(i), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Softmax, ExpectedCostGradientMatchesCentralDifferences)
{
    std::mt19937_64 rng(9);
    const Eigen::Index n = 5;
    Eigen::MatrixXd w(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
        w.col(c) = random_vector(rng, n, 0.0, 2.0);
    const auto a = random_vector(rng, n, -2.0, 2.0);
    Eigen::VectorXd g, scratch;
    example_loss(TrainLoss::ExpectedCost, a, w, 2, 0.7, g);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd hi = a, lo = a;
        hi(i) += 1e-6;
        lo(i) -= 1e-6;
        const double fd = (example_loss(TrainLoss::ExpectedCost, hi, w, 2, 0.7, scratch) -
                           example_loss(TrainLoss::ExpectedCost, lo, w, 2, 0.7, scratch)) /
                          2e-6;
        EXPECT_NEAR(g(i), fd, 1e-6);
    }
}

TEST(Softmax, LossNamesRoundTrip)
{
    for (auto l : {TrainLoss::ModifiedSoftmax, TrainLoss::ExpectedCost})
        EXPECT_EQ(train_loss_from_string(to_string(l)), l);
    EXPECT_THROW(train_loss_from_string("hinge"), Error);
}

TEST(Features, SizeFollowsTheOptions)
{
    FeatureOptions o;
    EXPECT_EQ(preprocess(synthetic_cycle(1.0, 0.0, 0.5), o).size(), o.size());
    o.include_control = true;
    EXPECT_EQ(preprocess(synthetic_cycle(1.0, 0.0, 0.5), o).size(), o.size());
}

TEST(Features, InvariantToAmplitudeAndPhase)
{
    const auto base = preprocess(synthetic_cycle(1.0, 0.1, 0.5));
    for (std::size_t shift : {17u, 64u, 201u}) {
        const auto f = preprocess(synthetic_cycle(3.7, 0.37, 0.5, shift));
        ASSERT_EQ(f.size(), base.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            EXPECT_NEAR(f[i], base[i], 1e-6) << "shift " << shift << " index " << i;
    }
}

TEST(Features, CarryBiasRatioAndLogPeriod)
{
    const auto f = preprocess(synthetic_cycle(2.0, 0.5, 0.25));
    EXPECT_NEAR(f[f.size() - 2], 0.25, 1e-12);
    EXPECT_NEAR(f.back(), std::log(0.25), 1e-12);
}

TEST(Features, RejectDegenerateCycles)
{
    auto c = synthetic_cycle(1.0, 0.0, 0.5);
    c.period = 0.0;
    EXPECT_THROW(preprocess(c), Error);
    c = synthetic_cycle(1.0, 0.0, 0.5);
    c.error_wave.resize(4);
    EXPECT_THROW(preprocess(c), Error);
}

TEST(GainRecovery, RatioOfNormalizedAmplitudes)
{
    ControllerTable t;
    t.relay = {1.0, -0.72};
    ControllerEntry e;
    e.gains = {2.0, 0.4};
    e.ref_harmonic = 1.0;
    t.entries.push_back(e);
    auto obs = synthetic_cycle(1.0, 0.0, 0.5);
    obs.harmonic_amplitude = 5.0;
    // amplitude 5 at h = 2.5 is a process gain twice the class gain
    EXPECT_NEAR(gain_ratio(e, obs, 2.5, 1.0), 2.0, 1e-12);
    const auto g = recover_gain_and_scale(0, obs, t, 2.5);
    EXPECT_NEAR(g.kp, 1.0, 1e-12);
    EXPECT_NEAR(g.kd, 0.2, 1e-12);
    EXPECT_THROW(recover_gain_and_scale(1, obs, t, 1.0), Error);
}

TEST(Dataset, UncorruptedCycleMatchesTheReference)
{
    const auto& p = small_pipeline();
    ASSERT_FALSE(p.refs.runs.empty());
    const auto& run = p.refs.runs.front();
    std::mt19937_64 rng(1);
    const auto lc = corrupt_cycle(run, 0.0, 0.0, rng, p.data.relay.cycle);
    EXPECT_NEAR(lc.period, run.cycle->period, 1e-9);
    EXPECT_NEAR(lc.harmonic_amplitude, run.cycle->harmonic_amplitude, 1e-9);
}

TEST(Dataset, AugmentationIsSeededAndLabelled)
{
    const auto& p = small_pipeline();
    DatasetOptions d = p.data;
    d.augmentation.examples_per_class = 5;
    const auto a = augment(p.refs, d, 3);
    const auto b = augment(p.refs, d, 3);
    ASSERT_EQ(a.examples.size(), 5 * p.refs.runs.size());
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
        EXPECT_EQ(a.examples[i].features, b.examples[i].features);
        EXPECT_LT(a.examples[i].label, p.grid.grid.size());
        EXPECT_EQ(a.examples[i].features.size(), d.features.size());
    }
}

TEST(Identify, SmallGridRecoversClassAndGain)
{
    const auto& p = small_pipeline();
    ASSERT_GE(p.grid.grid.size(), 2u);
    for (std::size_t c = 0; c < p.grid.grid.size(); ++c) {
        for (double gain : {0.4, 2.5}) {
            auto plant = p.grid.grid.classes[c].model;
            plant.gain *= gain;
            IdentifyOptions io;
            io.relay = p.data.relay;
            io.sim = p.data.sim;
            const auto r = identify(plant, p.id, io);
            EXPECT_EQ(r.classification.label, c) << "class " << c << " gain " << gain;
            EXPECT_NEAR(r.gain_ratio, gain, 0.02 * gain);
            EXPECT_NEAR(r.classification.probabilities.sum(), 1.0, 1e-9);
        }
    }
}

TEST(Train, RejectsMismatchedInputs)
{
    const auto& p = small_pipeline();
    TrainConfig tc;
    tc.hidden = {4};
    tc.epochs = 1;
    EXPECT_THROW(train({}, p.grid.grid, tc), Error);
    std::vector<TrainingExample> bad{{std::vector<double>(3, 0.0), 0}};
    EXPECT_THROW(train(bad, p.grid.grid, tc), Error);
    tc.epochs = 0;
    EXPECT_THROW(tc.validate(), Error);
}
