#pragma once

#include <Eigen/Dense>

#include <functional>
#include <random>

#include "relaytune/dnn/dataset.hpp"

namespace relaytune {

/// p_i = exp(J_il a_i) / sum_j exp(J_jl a_j) for the column J_(.l) of the true label l.
inline Eigen::VectorXd modified_softmax(const Eigen::VectorXd& a, const Eigen::VectorXd& j)
{
    require(a.size() == j.size() && a.size() > 0, "modified_softmax: logits and weights must match");
    const Eigen::VectorXd z = j.cwiseProduct(a);
    const Eigen::ArrayXd e = (z.array() - z.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

/// Cross-entropy -log p_l of the modified softmax.
inline double modified_softmax_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& j, std::size_t label)
{
    require(label < static_cast<std::size_t>(a.size()), "modified_softmax_loss: label out of range");
    const Eigen::VectorXd z = j.cwiseProduct(a);
    const double m = z.maxCoeff();
    return -(z(static_cast<Eigen::Index>(label)) - m) + std::log((z.array() - m).exp().sum());
}

/// dL/da_i = J_il (p_i - y_i).
inline Eigen::VectorXd modified_softmax_gradient(const Eigen::VectorXd& a, const Eigen::VectorXd& j,
                                                 std::size_t label)
{
    require(label < static_cast<std::size_t>(a.size()), "modified_softmax_gradient: label out of range");
    Eigen::VectorXd g = modified_softmax(a, j);
    g(static_cast<Eigen::Index>(label)) -= 1.0;
    return j.cwiseProduct(g);
}

/// q_l = modified_softmax(a, W_(.l))_l for every candidate label l: the probability the
/// training loss would assign to label l had l been the true class.
inline Eigen::VectorXd weighted_label_probabilities(const Eigen::VectorXd& a, const Eigen::MatrixXd& w)
{
    require(w.rows() == a.size() && w.cols() == a.size(), "weighted probabilities: weight matrix size mismatch");
    Eigen::VectorXd q(a.size());
    for (Eigen::Index l = 0; l < a.size(); ++l)
        q(l) = std::exp(-modified_softmax_loss(a, w.col(l), static_cast<std::size_t>(l)));
    return q;
}

/// Training objective.
///
/// ModifiedSoftmax is the J-weighted softmax cross-entropy exactly as above. Because the
/// true class enters with weight J_ll = 0, shifting every logit towards -inf drives the loss
/// to zero for all examples at once; the network then carries no class information.
/// ExpectedCost keeps a plain softmax and adds the expected misclassification cost
/// `cost_weight * sum_i W_il p_i` to the cross-entropy, which penalizes mass on classes
/// in proportion to J.
enum class TrainLoss { ModifiedSoftmax, ExpectedCost };

inline std::string to_string(TrainLoss l) { return l == TrainLoss::ModifiedSoftmax ? "modified-softmax" : "expected-cost"; }

inline TrainLoss train_loss_from_string(const std::string& s)
{
    if (s == "modified-softmax")
        return TrainLoss::ModifiedSoftmax;
    if (s == "expected-cost")
        return TrainLoss::ExpectedCost;
    throw Error("unknown training loss '" + s + "' (expected modified-softmax or expected-cost)");
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& a)
{
    const Eigen::ArrayXd e = (a.array() - a.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

/// Loss of one example and its gradient with respect to the logits.
inline double example_loss(TrainLoss kind, const Eigen::VectorXd& a, const Eigen::MatrixXd& w, std::size_t label,
                           double cost_weight, Eigen::VectorXd& grad)
{
    const auto l = static_cast<Eigen::Index>(label);
    if (kind == TrainLoss::ModifiedSoftmax) {
        grad = modified_softmax_gradient(a, w.col(l), label);
        return modified_softmax_loss(a, w.col(l), label);
    }
    const Eigen::VectorXd p = softmax(a);
    const Eigen::VectorXd c = w.col(l);
    const double expected = c.dot(p);
    grad = p + cost_weight * p.cwiseProduct((c.array() - expected).matrix());
    grad(l) -= 1.0;
    return -std::log(std::max(p(l), 1e-300)) + cost_weight * expected;
}

/// Label scores used at inference: weighted label probabilities for the modified softmax,
/// the plain softmax otherwise.
inline Eigen::VectorXd label_probabilities(TrainLoss kind, const Eigen::VectorXd& a, const Eigen::MatrixXd& w)
{
    return kind == TrainLoss::ModifiedSoftmax ? weighted_label_probabilities(a, w) : softmax(a);
}

struct AdamConfig {
    double step = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Decoupled weight decay (AdamW), applied to weights only.
    double weight_decay = 0.0;
};

struct TrainConfig {
    std::vector<int> hidden{3000, 1000};
    AdamConfig adam;
    int epochs = 40;
    int batch = 64;
    std::uint64_t rng_seed = 1;
    AugmentationSpec augmentation;
    /// Encoding the dataset was built with; stored in the model for inference.
    FeatureOptions features;
    /// Loss weights are J in percent times `j_scale`, clipped at `j_cap` (destabilizing
    /// pairs carry J = inf). `j_offset` > 0 selects the J + eps variant, which also
    /// trains the true-class logit.
    double j_scale = 0.01;
    double j_cap = 10.0;
    double j_offset = 0.0;
    TrainLoss loss = TrainLoss::ExpectedCost;
    double cost_weight = 1.0;

    void validate() const
    {
        require(adam.step > 0.0, "train: step size must be positive");
        require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
                "train: moment decays must lie in [0, 1)");
        require(adam.epsilon > 0.0, "train: epsilon must be positive");
        require(adam.weight_decay >= 0.0, "train: weight decay must be non-negative");
        require(epochs >= 1 && batch >= 1, "train: need at least one epoch and a positive batch size");
        require(j_scale > 0.0 && j_cap > 0.0 && j_offset >= 0.0 && cost_weight >= 0.0, "train: bad loss weight settings");
        for (int h : hidden)
            require(h >= 1, "train: hidden layers need at least one unit");
        augmentation.validate();
    }
};

class MlpModel {
public:
    /// Layer widths, input first.
    std::vector<int> sizes;
    /// weights[k] maps layer k to layer k + 1 (rows = sizes[k + 1]).
    std::vector<Eigen::MatrixXf> weights;
    std::vector<Eigen::VectorXf> biases;
    /// Per-feature standardization learned from the training set.
    Eigen::VectorXf input_mean;
    Eigen::VectorXf input_scale;
    FeatureOptions features;
    /// Loss weights W_il used in training; inference scores labels with them.
    Eigen::MatrixXd label_weights;
    TrainLoss loss = TrainLoss::ExpectedCost;

    [[nodiscard]] std::size_t input_size() const { return sizes.empty() ? 0 : static_cast<std::size_t>(sizes.front()); }
    [[nodiscard]] std::size_t classes() const { return sizes.empty() ? 0 : static_cast<std::size_t>(sizes.back()); }

    void validate() const
    {
        require(sizes.size() >= 2 && weights.size() == sizes.size() - 1 && biases.size() == weights.size(),
                "mlp: layer lists are inconsistent");
        for (std::size_t k = 0; k < weights.size(); ++k) {
            require(weights[k].rows() == sizes[k + 1] && weights[k].cols() == sizes[k], "mlp: layer dimensions do not chain");
            require(biases[k].size() == sizes[k + 1], "mlp: bias size mismatch");
            require(weights[k].allFinite() && biases[k].allFinite(), "mlp: non-finite parameters");
        }
        require(input_mean.size() == sizes.front() && input_scale.size() == sizes.front(),
                "mlp: normalization size mismatch");
        require(features.size() == input_size(), "mlp: feature options do not match the input layer");
        require(label_weights.rows() == sizes.back() && label_weights.cols() == sizes.back() && label_weights.allFinite(),
                "mlp: label weight matrix size mismatch");
    }

    /// Standardized input columns.
    [[nodiscard]] Eigen::MatrixXf normalize(const Eigen::MatrixXf& x) const
    {
        return ((x.colwise() - input_mean).array().colwise() / input_scale.array()).matrix();
    }

    /// Forward pass; `acts` (optional) receives every layer activation, input included.
    Eigen::MatrixXf forward(const Eigen::MatrixXf& xn, std::vector<Eigen::MatrixXf>* acts = nullptr) const
    {
        Eigen::MatrixXf h = xn;
        if (acts) {
            acts->clear();
            acts->push_back(h);
        }
        for (std::size_t k = 0; k < weights.size(); ++k) {
            Eigen::MatrixXf z = (weights[k] * h).colwise() + biases[k];
            if (k + 1 < weights.size())
                z = z.cwiseMax(0.0f);
            h = std::move(z);
            if (acts)
                acts->push_back(h);
        }
        return h;
    }

    [[nodiscard]] Eigen::VectorXd logits(const std::vector<double>& x) const
    {
        require(x.size() == input_size(), "mlp: feature vector has " + std::to_string(x.size()) +
                                              " entries, model expects " + std::to_string(input_size()));
        Eigen::MatrixXf col(static_cast<Eigen::Index>(x.size()), 1);
        for (std::size_t i = 0; i < x.size(); ++i)
            col(static_cast<Eigen::Index>(i), 0) = static_cast<float>(x[i]);
        return forward(normalize(col)).col(0).cast<double>();
    }
};

struct TrainLogRow {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    /// Mean J_(predicted, true) in percent over the epoch, with J capped as in the loss.
    double mean_j_cost = 0.0;
};

/// Loss weight matrix W_il from the grid J (percent).
inline Eigen::MatrixXd loss_weights(const ProcessGrid& grid, const TrainConfig& cfg)
{
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd w(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < n; ++l) {
            const double v = grid.j[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
            w(i, l) = (std::isfinite(v) ? std::min(cfg.j_cap, std::max(0.0, v) * cfg.j_scale) : cfg.j_cap) + cfg.j_offset;
        }
    return w;
}

struct TrainHooks {
    std::vector<TrainLogRow>* log = nullptr;
    std::function<void(const TrainLogRow&)> on_epoch;
    /// Called before every epoch after the first with the epoch number; may replace the
    /// examples (same size and labels layout) with freshly augmented ones.
    std::function<void(int, std::vector<TrainingExample>&)> refresh;
};

/// Trains the classifier with Adam on mini-batches in a seeded shuffle order. Input
/// standardization is fixed from the first epoch's examples. Throws when the loss stops
/// being finite.
inline MlpModel train(std::vector<TrainingExample> data, const ProcessGrid& grid, const TrainConfig& cfg,
                      const TrainHooks& hooks = {})
{
    cfg.validate();
    require(!data.empty(), "train: empty dataset");
    require(grid.size() >= 2 && grid.j.size() == grid.size(), "train: grid needs at least two classes and its J matrix");
    const std::size_t in = data.front().features.size();
    require(in == cfg.features.size(), "train: feature vectors do not match the configured encoding");
    for (const auto& ex : data) {
        require(ex.features.size() == in, "train: inconsistent feature sizes");
        require(ex.label < grid.size(), "train: label " + std::to_string(ex.label) + " outside the grid");
        for (double v : ex.features)
            require(std::isfinite(v), "train: non-finite feature");
    }
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto nin = static_cast<Eigen::Index>(in);
    Eigen::MatrixXf x(nin, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < nin; ++r)
            x(r, c) = static_cast<float>(data[static_cast<std::size_t>(c)].features[static_cast<std::size_t>(r)]);

    MlpModel m;
    m.features = cfg.features;
    m.sizes.push_back(static_cast<int>(in));
    for (int h : cfg.hidden)
        m.sizes.push_back(h);
    m.sizes.push_back(static_cast<int>(grid.size()));
    m.input_mean = x.rowwise().mean();
    m.input_scale = ((x.colwise() - m.input_mean).array().square().rowwise().mean().sqrt()).matrix();
    for (Eigen::Index r = 0; r < nin; ++r)
        if (!(m.input_scale(r) > 1e-6f))
            m.input_scale(r) = 1.0f;
    std::mt19937_64 rng(cfg.rng_seed);
    for (std::size_t k = 0; k + 1 < m.sizes.size(); ++k) {
        std::normal_distribution<float> init(0.0f, std::sqrt(2.0f / static_cast<float>(m.sizes[k])));
        Eigen::MatrixXf w(m.sizes[k + 1], m.sizes[k]);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = init(rng);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXf::Zero(m.sizes[k + 1]));
    }
    const std::size_t layers = m.weights.size();
    std::vector<Eigen::MatrixXf> mw(layers), vw(layers);
    std::vector<Eigen::VectorXf> mb(layers), vb(layers);
    for (std::size_t k = 0; k < layers; ++k) {
        mw[k] = vw[k] = Eigen::MatrixXf::Zero(m.weights[k].rows(), m.weights[k].cols());
        mb[k] = vb[k] = Eigen::VectorXf::Zero(m.biases[k].size());
    }

    const Eigen::MatrixXd jw = loss_weights(grid, cfg);
    m.label_weights = jw;
    m.loss = cfg.loss;
    Eigen::VectorXd grad;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto b1 = static_cast<float>(cfg.adam.beta1), b2 = static_cast<float>(cfg.adam.beta2);
    const auto eps = static_cast<float>(cfg.adam.epsilon);
    long step = 0;
    std::vector<Eigen::MatrixXf> acts;

    Eigen::MatrixXf xn = m.normalize(x);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (epoch > 1 && hooks.refresh) {
            hooks.refresh(epoch, data);
            require(static_cast<Eigen::Index>(data.size()) == n, "train: refresh changed the dataset size");
            for (Eigen::Index c = 0; c < n; ++c) {
                const auto& ex = data[static_cast<std::size_t>(c)];
                require(ex.features.size() == in && ex.label < grid.size(), "train: refresh produced a bad example");
                for (Eigen::Index r = 0; r < nin; ++r)
                    x(r, c) = static_cast<float>(ex.features[static_cast<std::size_t>(r)]);
            }
            xn = m.normalize(x);
        }
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0, j_sum = 0.0;
        long correct = 0;
        for (Eigen::Index s = 0; s < n; s += cfg.batch) {
            const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch, n - s);
            Eigen::MatrixXf xb(nin, bs);
            std::vector<std::size_t> labels(static_cast<std::size_t>(bs));
            for (Eigen::Index c = 0; c < bs; ++c) {
                const Eigen::Index idx = order[static_cast<std::size_t>(s + c)];
                xb.col(c) = xn.col(idx);
                labels[static_cast<std::size_t>(c)] = data[static_cast<std::size_t>(idx)].label;
            }
            const Eigen::MatrixXf a = m.forward(xb, &acts);
            Eigen::MatrixXf delta(a.rows(), bs);
            for (Eigen::Index c = 0; c < bs; ++c) {
                const std::size_t label = labels[static_cast<std::size_t>(c)];
                const auto l = static_cast<Eigen::Index>(label);
                const Eigen::VectorXd ac = a.col(c).cast<double>();
                loss_sum += example_loss(cfg.loss, ac, jw, label, cfg.cost_weight, grad);
                delta.col(c) = (grad / static_cast<double>(bs)).cast<float>();
                Eigen::Index pred = 0;
                label_probabilities(cfg.loss, ac, jw).maxCoeff(&pred);
                correct += pred == l;
                j_sum += pred == l ? 0.0 : jw(pred, l) / cfg.j_scale;
            }
            if (!std::isfinite(loss_sum))
                throw Error("train: loss diverged at epoch " + std::to_string(epoch) + ", sample " + std::to_string(s) +
                            " (try a smaller step size)");

            ++step;
            const float c1 = 1.0f - std::pow(b1, static_cast<float>(step));
            const float c2 = 1.0f - std::pow(b2, static_cast<float>(step));
            const auto lr = static_cast<float>(cfg.adam.step);
            for (std::size_t k = layers; k-- > 0;) {
                const Eigen::MatrixXf gw = delta * acts[k].transpose();
                const Eigen::VectorXf gb = delta.rowwise().sum();
                if (k > 0)
                    delta = (m.weights[k].transpose() * delta).cwiseProduct((acts[k].array() > 0.0f).cast<float>().matrix());
                mw[k] = b1 * mw[k] + (1.0f - b1) * gw;
                vw[k] = b2 * vw[k] + (1.0f - b2) * gw.cwiseProduct(gw);
                mb[k] = b1 * mb[k] + (1.0f - b1) * gb;
                vb[k] = b2 * vb[k] + (1.0f - b2) * gb.cwiseProduct(gb);
                if (cfg.adam.weight_decay > 0.0)
                    m.weights[k] *= 1.0f - lr * static_cast<float>(cfg.adam.weight_decay);
                m.weights[k].array() -= lr * (mw[k].array() / c1) / ((vw[k].array() / c2).sqrt() + eps);
                m.biases[k].array() -= lr * (mb[k].array() / c1) / ((vb[k].array() / c2).sqrt() + eps);
            }
        }
        const TrainLogRow row{epoch, loss_sum / static_cast<double>(n),
                              static_cast<double>(correct) / static_cast<double>(n), j_sum / static_cast<double>(n)};
        if (hooks.log)
            hooks.log->push_back(row);
        if (hooks.on_epoch)
            hooks.on_epoch(row);
    }
    m.validate();
    return m;
}

/// Trains on corrupted copies of clean reference traces, drawing a fresh corruption every
/// epoch when `fresh` is set. With a single clean trace per class a fixed draw is memorized
/// quickly, because the class differences are small next to the augmentation noise.
inline MlpModel train_augmented(const ReferenceRuns& refs, const ProcessGrid& grid, const DatasetOptions& data,
                                const TrainConfig& cfg, bool fresh = true, TrainHooks hooks = {})
{
    require(!refs.runs.empty(), "train: no converged reference runs");
    DatasetOptions d = data;
    d.augmentation = cfg.augmentation;
    d.features = cfg.features;
    Dataset first = augment(refs, d, cfg.augmentation.seed);
    require(!first.examples.empty(), "train: augmentation produced no examples");
    if (fresh) {
        const std::size_t expected = first.examples.size();
        hooks.refresh = [&refs, d, expected, seed = cfg.augmentation.seed](int epoch, std::vector<TrainingExample>& ex) {
            Dataset next = augment(refs, d, seed + 7919ULL * static_cast<std::uint64_t>(epoch));
            // a class that failed this draw keeps its previous examples
            if (next.examples.size() == expected)
                ex = std::move(next.examples);
        };
    }
    return train(std::move(first.examples), grid, cfg, hooks);
}

} // namespace relaytune
