#pragma once

#include <random>

#include "relaytune/dnn/features.hpp"
#include "relaytune/tuning/grid.hpp"

namespace relaytune {

/// Measurement corruption applied to recorded relay traces, in units of the class a_0.
struct AugmentationSpec {
    int examples_per_class = 50;
    double sigma_max = 0.2;
    double bias_max = 0.3;
    std::uint64_t seed = 1;

    void validate() const
    {
        require(examples_per_class >= 1, "augmentation: need at least one example per class");
        require(sigma_max >= 0.0 && bias_max >= 0.0, "augmentation: magnitudes must be non-negative");
    }
};

struct TrainingExample {
    std::vector<double> features;
    std::size_t label = 0;
};

struct DatasetOptions {
    RelayTestConfig relay;
    SimulationConfig sim;
    FeatureOptions features;
    AugmentationSpec augmentation;
};

struct Dataset {
    std::vector<TrainingExample> examples;
    /// Classes whose relay test did not converge (reported, skipped).
    std::vector<std::size_t> failed;
    std::size_t feature_size = 0;
};

/// Adds white noise (sigma) and a constant offset to the error of a recorded relay trace
/// and re-extracts the cycle. The relay switching itself is left as recorded, and only the
/// periods the cycle extraction reads are corrupted.
inline LimitCycle corrupt_cycle(const RelayRun& run, double sigma, double bias, std::mt19937_64& rng,
                                const LimitCycleOptions& opt = {})
{
    require(sigma >= 0.0, "corrupt_cycle: sigma must be non-negative");
    TimeSeries e = run.trace.error_series();
    const TimeSeries u = run.trace.control_series();
    const auto sw = rising_switch_times(u);
    std::size_t first = 0;
    if (sw.size() > static_cast<std::size_t>(opt.window))
        first = static_cast<std::size_t>(std::max(
            0.0, std::floor((sw[sw.size() - 1 - static_cast<std::size_t>(opt.window)] - e.start) / e.dt) - 1.0));
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = first; i < e.size(); ++i)
        e.values[i] += bias + (sigma > 0.0 ? sigma * n(rng) : 0.0);
    LimitCycleOptions o = opt;
    o.noise_amplitude = 0.0;
    // convergence was settled on the clean trace
    o.tolerance = kInf;
    return detect_limit_cycle(e, u, o);
}

/// Clean relay traces of the grid classes, the raw material of the training set.
struct ReferenceRuns {
    std::vector<std::size_t> labels;
    std::vector<RelayRun> runs;
    std::vector<std::size_t> failed;
};

inline ReferenceRuns simulate_references(const ProcessGrid& grid, const ControllerTable& table, const DatasetOptions& opt)
{
    require(grid.size() == table.entries.size(), "generate_dataset: grid and controller table disagree");
    require(grid.size() > 0, "generate_dataset: empty grid");
    RelayTestConfig rt = opt.relay;
    rt.relay.base = table.relay;
    rt.noise = {};
    ReferenceRuns refs;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        RelayRun run = loop_relay(grid.ranges, opt.sim, grid.classes[c].model, rt);
        if (!run.converged()) {
            refs.failed.push_back(c);
            continue;
        }
        refs.labels.push_back(c);
        refs.runs.push_back(std::move(run));
    }
    return refs;
}

/// `examples_per_class` corrupted copies of every reference trace. `seed` selects the draw;
/// every class has its own stream so the set does not depend on class order.
inline Dataset augment(const ReferenceRuns& refs, const DatasetOptions& opt, std::uint64_t seed)
{
    opt.augmentation.validate();
    Dataset out;
    out.feature_size = opt.features.size();
    out.failed = refs.failed;
    for (std::size_t r = 0; r < refs.runs.size(); ++r) {
        const RelayRun& run = refs.runs[r];
        const std::size_t c = refs.labels[r];
        const double a0 = run.cycle->amplitude;
        std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + c);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        try {
            std::vector<TrainingExample> block;
            for (int k = 0; k < opt.augmentation.examples_per_class; ++k) {
                const double sigma = opt.augmentation.sigma_max * a0 * u01(rng);
                const double bias = opt.augmentation.bias_max * a0 * (2.0 * u01(rng) - 1.0);
                const LimitCycle lc = corrupt_cycle(run, sigma, bias, rng, opt.relay.cycle);
                block.push_back({preprocess(lc, opt.features), c});
            }
            out.examples.insert(out.examples.end(), block.begin(), block.end());
        } catch (const Error&) {
            out.failed.push_back(c);
        }
    }
    return out;
}

/// Relay test of every class followed by `examples_per_class` corrupted copies of its trace.
///
/// The measurement corruption is applied to the recorded trace rather than inside the loop:
/// broadband noise of this size inside a 200 Hz relay loop prevents any steady oscillation,
/// while the recorded trace still carries the waveform distortion the classifier must tolerate.
inline Dataset generate_dataset(const ProcessGrid& grid, const ControllerTable& table, const DatasetOptions& opt)
{
    opt.augmentation.validate();
    return augment(simulate_references(grid, table, opt), opt, opt.augmentation.seed);
}

} // namespace relaytune
