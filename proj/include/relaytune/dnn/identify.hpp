#pragma once

#include <functional>

#include "relaytune/dnn/mlp.hpp"

namespace relaytune {

struct Classification {
    std::size_t label = 0;
    /// Label scores (see label_probabilities); label is their argmax.
    Eigen::VectorXd probabilities;
};

inline Classification classify(const MlpModel& model, const LimitCycle& cycle)
{
    const Eigen::VectorXd a = model.logits(preprocess(cycle, model.features));
    Classification c;
    c.probabilities = label_probabilities(model.loss, a, model.label_weights);
    Eigen::Index best = 0;
    c.probabilities.maxCoeff(&best);
    c.label = static_cast<std::size_t>(best);
    return c;
}

/// Gain ratio c = (a_obs / h) / (a_ref / h_ref) from first-harmonic amplitudes; the
/// class gains divided by c give the controller for the observed process.
inline double gain_ratio(const ControllerEntry& entry, const LimitCycle& observed, double h, double h_ref)
{
    require(entry.ref_harmonic > 0.0, "gain recovery: reference amplitude is zero");
    require(h > 0.0 && h_ref > 0.0, "gain recovery: relay amplitudes must be positive");
    require(observed.harmonic_amplitude > 0.0, "gain recovery: observed amplitude is zero");
    return (observed.harmonic_amplitude / h) / (entry.ref_harmonic / h_ref);
}

inline PdGains recover_gain_and_scale(std::size_t label, const LimitCycle& observed, const ControllerTable& table, double h)
{
    require(label < table.entries.size(), "gain recovery: class outside the controller table");
    const ControllerEntry& e = table.entries[label];
    const double c = gain_ratio(e, observed, h, table.relay.h);
    return {e.gains.kp / c, e.gains.kd / c};
}

/// A trained classifier together with what it indexes.
struct Identifier {
    GridRanges ranges;
    ControllerTable table;
    MlpModel model;
};

struct IdentifyOptions {
    RelayTestConfig relay;
    SimulationConfig sim;
    /// Optional corruption of the recorded error before classification (Monte-Carlo studies).
    double sigma = 0.0;
    double bias = 0.0;
    std::uint64_t seed = 1;
};

struct Identification {
    RelayRun run;
    LimitCycle cycle;
    Classification classification;
    double gain_ratio = 0.0;
    PdGains gains;
};

/// Relay test on `plant` (any steppable plant), then classify and scale the looked-up gains.
template <class Plant>
Identification identify(const Plant& plant, const Identifier& id, const IdentifyOptions& opt)
{
    RelayTestConfig rt = opt.relay;
    rt.relay.base = id.table.relay;
    auto stepper = make_stepper(plant, rt.dt_sim);
    Identification out;
    out.run = run_relay_loop(stepper, rt);
    if (!out.run.converged())
        throw Error("identification: relay test failed: " + out.run.diagnostic);
    if (opt.sigma > 0.0 || opt.bias != 0.0) {
        std::mt19937_64 rng(opt.seed);
        out.cycle = corrupt_cycle(out.run, opt.sigma, opt.bias, rng, rt.cycle);
    } else {
        out.cycle = *out.run.cycle;
    }
    out.classification = classify(id.model, out.cycle);
    const std::size_t c = out.classification.label;
    require(c < id.table.entries.size(), "identification: classifier and controller table disagree");
    out.gain_ratio = gain_ratio(id.table.entries[c], out.cycle, rt.relay.base.h, id.table.relay.h);
    out.gains = {id.table.entries[c].gains.kp / out.gain_ratio, id.table.entries[c].gains.kd / out.gain_ratio};
    return out;
}

/// Inner process and outer (lateral) process of one multirotor axis.
struct CascadeTestPlant {
    TransferFunctionModel inner;
    TransferFunctionModel outer;
};

struct CascadedIdentification {
    Identification inner;
    Identification outer;
};

/// Identifies the inner loop, closes it with the identified gains, then identifies the outer
/// loop against the lateral classifier that belongs to the identified inner class.
inline CascadedIdentification identify_cascaded(const CascadeTestPlant& plant, const Identifier& inner,
                                                const std::function<const Identifier&(std::size_t)>& lateral_for,
                                                const IdentifyOptions& opt)
{
    require(static_cast<bool>(lateral_for), "identify_cascaded: no lateral classifier provider");
    CascadedIdentification out;
    out.inner = identify(plant.inner, inner, opt);
    const Identifier& lat = lateral_for(out.inner.classification.label);
    require(lat.ranges.kind == LoopKind::Lateral, "identify_cascaded: provider returned a non-lateral classifier");
    const CascadePlant closed{{plant.inner, out.inner.gains}, plant.outer, opt.sim};
    out.outer = identify(closed, lat, opt);
    return out;
}

} // namespace relaytune
