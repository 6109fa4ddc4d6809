#include "steinselect/refit.hpp"

#include "steinselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace steinselect {

namespace {

struct Standardizer {
    VectorXd mean;
    VectorXd scale;
};

Standardizer fit_standardizer(const MatrixXd& x, bool enabled) {
    Standardizer st;
    if (!enabled) {
        st.mean = VectorXd::Zero(x.cols());
        st.scale = VectorXd::Ones(x.cols());
        return st;
    }
    st.mean = x.colwise().mean().transpose();
    st.scale.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt((x.col(j).array() - st.mean(j)).square().mean());
        st.scale(j) = sd > 1e-12 * (1.0 + std::abs(st.mean(j))) ? sd : 1.0;
    }
    return st;
}

// features x n, standardized
MatrixXd prepare_inputs(const RefitModel& m, const MatrixXd& raw) {
    MatrixXd z = raw.transpose();
    z.colwise() -= m.input_mean;
    z.array().colwise() /= m.input_scale.array();
    return z;
}

// Optimizer state mirrors the layer shapes.
struct OptimizerState {
    std::vector<DenseLayer> first;
    std::vector<DenseLayer> second;
    long step = 0;

    explicit OptimizerState(const Mlp& net) {
        for (const auto& l : net.layers()) {
            first.push_back({MatrixXd::Zero(l.weights.rows(), l.weights.cols()), VectorXd::Zero(l.bias.size())});
        }
        second = first;
    }
};

void apply_update(Mlp& net, const MlpGradient& grad, OptimizerState& state, const RefitConfig& cfg) {
    ++state.step;
    auto& layers = net.layers();
    if (cfg.optimizer == Optimizer::sgd_momentum) {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& v = state.first[l];
            v.weights = cfg.momentum * v.weights - cfg.learning_rate * grad.layers[l].weights;
            v.bias = cfg.momentum * v.bias - cfg.learning_rate * grad.layers[l].bias;
            layers[l].weights += v.weights;
            layers[l].bias += v.bias;
        }
        return;
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    auto adam = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        adam(layers[l].weights, state.first[l].weights, state.second[l].weights, grad.layers[l].weights);
        adam(layers[l].bias, state.first[l].bias, state.second[l].bias, grad.layers[l].bias);
    }
}

double mse_of(const Mlp& net, const MatrixXd& inputs, const VectorXd& targets) {
    return (net.forward(inputs) - targets).squaredNorm() / static_cast<double>(targets.size());
}

}  // namespace

std::string to_string(Optimizer o) {
    return o == Optimizer::adaptive_moment ? "adam" : "sgd";
}

Optimizer parse_optimizer(const std::string& text) {
    if (text == "sgd" || text == "sgd_momentum") return Optimizer::sgd_momentum;
    if (text == "adam" || text == "adaptive_moment") return Optimizer::adaptive_moment;
    throw ConfigError("optimizer must be \"sgd\" or \"adam\", got \"" + text + "\"");
}

void RefitConfig::validate() const {
    if (hidden.empty()) throw ConfigError("refit network needs at least one hidden layer");
    for (Index w : hidden) {
        if (w < 1) throw ConfigError("hidden layer widths must be >= 1");
    }
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].weights.rows() != layers_[l].bias.size()) throw DimensionError("layer bias/weight mismatch");
        if (l > 0 && layers_[l].weights.cols() != layers_[l - 1].weights.rows()) {
            throw DimensionError("layer " + std::to_string(l) + " input does not match previous output");
        }
    }
    if (layers_.back().weights.rows() != 1) throw DimensionError("network output must be scalar");
}

Mlp Mlp::initialize(Index inputs, const std::vector<Index>& hidden, Rng& rng) {
    std::vector<DenseLayer> layers;
    Index fan_in = inputs;
    std::vector<Index> widths = hidden;
    widths.push_back(1);
    for (Index fan_out : widths) {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> uniform(-a, a);
        DenseLayer layer{MatrixXd(fan_out, fan_in), VectorXd::Zero(fan_out)};
        for (Index r = 0; r < fan_out; ++r) {
            for (Index c = 0; c < fan_in; ++c) layer.weights(r, c) = uniform(rng);
        }
        layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return Mlp(std::move(layers));
}

VectorXd Mlp::forward(const MatrixXd& inputs) const {
    if (inputs.rows() != input_size()) throw DimensionError("network expects " + std::to_string(input_size()) + " inputs");
    MatrixXd act = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        MatrixXd z = layers_[l].weights * act;
        z.colwise() += layers_[l].bias;
        if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
        act = std::move(z);
    }
    return act.row(0).transpose();
}

Index Mlp::input_size() const { return layers_.empty() ? 0 : layers_.front().weights.cols(); }

Index Mlp::parameter_count() const {
    Index count = 0;
    for (const auto& l : layers_) count += l.weights.size() + l.bias.size();
    return count;
}

VectorXd Mlp::parameters() const {
    VectorXd flat(parameter_count());
    Index at = 0;
    for (const auto& l : layers_) {
        flat.segment(at, l.weights.size()) = l.weights.reshaped();
        at += l.weights.size();
        flat.segment(at, l.bias.size()) = l.bias;
        at += l.bias.size();
    }
    return flat;
}

void Mlp::set_parameters(const VectorXd& flat) {
    if (flat.size() != parameter_count()) throw DimensionError("parameter vector has the wrong length");
    Index at = 0;
    for (auto& l : layers_) {
        l.weights.reshaped() = flat.segment(at, l.weights.size());
        at += l.weights.size();
        l.bias = flat.segment(at, l.bias.size());
        at += l.bias.size();
    }
}

VectorXd MlpGradient::flatten() const {
    Index total = 0;
    for (const auto& l : layers) total += l.weights.size() + l.bias.size();
    VectorXd flat(total);
    Index at = 0;
    for (const auto& l : layers) {
        flat.segment(at, l.weights.size()) = l.weights.reshaped();
        at += l.weights.size();
        flat.segment(at, l.bias.size()) = l.bias;
        at += l.bias.size();
    }
    return flat;
}

MlpGradient loss_gradient(const Mlp& net, const MatrixXd& inputs, const VectorXd& targets) {
    const auto& layers = net.layers();
    if (inputs.cols() != targets.size()) throw DimensionError("inputs and targets disagree on batch size");
    const auto batch = static_cast<double>(targets.size());

    // pre-activations per layer; activations[0] is the input
    std::vector<MatrixXd> activations{inputs};
    std::vector<MatrixXd> pre;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        MatrixXd z = layers[l].weights * activations.back();
        z.colwise() += layers[l].bias;
        pre.push_back(z);
        activations.push_back(l + 1 < layers.size() ? MatrixXd(z.cwiseMax(0.0)) : z);
    }

    MlpGradient grad;
    const Eigen::RowVectorXd residual = activations.back().row(0) - targets.transpose();
    grad.loss = residual.squaredNorm() / batch;
    grad.layers.resize(layers.size());

    MatrixXd delta = (2.0 / batch) * residual;
    for (std::size_t l = layers.size(); l-- > 0;) {
        grad.layers[l].weights = delta * activations[l].transpose();
        grad.layers[l].bias = delta.rowwise().sum();
        if (l > 0) {
            MatrixXd back = layers[l].weights.transpose() * delta;
            delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return grad;
}

RefitModel train(const Dataset& d, const std::vector<Index>& selected, const RefitConfig& cfg) {
    cfg.validate();
    if (selected.empty()) throw ConfigError("refit needs a nonempty feature set");
    for (Index j : selected) {
        if (j < 0 || j >= d.p()) throw DimensionError("selected index " + std::to_string(j) + " out of range");
    }

    RefitModel model;
    model.feature_indices = selected;
    model.training_p = d.p();
    for (Index j : selected) model.feature_ids.push_back(d.feature_ids()[static_cast<std::size_t>(j)]);

    const Dataset sub = d.select_columns(selected);
    const Standardizer st = fit_standardizer(sub.x(), cfg.standardize_inputs);
    model.input_mean = st.mean;
    model.input_scale = st.scale;

    const VectorXd& y = d.y();
    model.target_mean = y.mean();
    const double y_sd = std::sqrt((y.array() - model.target_mean).square().mean());
    model.target_scale = y_sd > 1e-12 * (1.0 + std::abs(model.target_mean)) ? y_sd : 1.0;
    const double unit = model.target_scale * model.target_scale;

    const MatrixXd inputs = prepare_inputs(model, sub.x());
    const VectorXd targets = (y.array() - model.target_mean) / model.target_scale;

    Rng init_rng = make_rng(cfg.seed, "init");
    Mlp net = Mlp::initialize(inputs.rows(), cfg.hidden, init_rng);
    model.initial_train_mse = mse_of(net, inputs, targets) * unit;

    const Index n = d.n();
    const Index batch = std::min(cfg.batch_size, n);
    Rng shuffle_rng = make_rng(cfg.seed, "shuffle");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    OptimizerState state(net);

    MatrixXd batch_inputs(inputs.rows(), batch);
    VectorXd batch_targets(batch);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (Index i = n - 1; i > 0; --i) {
            std::uniform_int_distribution<Index> pick(0, i);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(shuffle_rng))]);
        }
        double epoch_loss = 0.0;
        for (Index start = 0; start < n; start += batch) {
            const Index len = std::min(batch, n - start);
            batch_inputs.resize(inputs.rows(), len);
            batch_targets.resize(len);
            for (Index k = 0; k < len; ++k) {
                const Index row = order[static_cast<std::size_t>(start + k)];
                batch_inputs.col(k) = inputs.col(row);
                batch_targets(k) = targets(row);
            }
            const MlpGradient grad = loss_gradient(net, batch_inputs, batch_targets);
            if (!std::isfinite(grad.loss)) {
                throw DivergenceError("refit loss became non-finite at step " + std::to_string(state.step),
                                      state.step);
            }
            apply_update(net, grad, state, cfg);
            epoch_loss += grad.loss * static_cast<double>(len);
        }
        model.loss_curve.push_back(epoch_loss / static_cast<double>(n) * unit);
    }

    model.final_train_mse = mse_of(net, inputs, targets) * unit;
    if (!std::isfinite(model.final_train_mse) || model.final_train_mse > model.initial_train_mse) {
        throw DivergenceError("refit diverged: training MSE " + format_double(model.final_train_mse) +
                                  " exceeds the initial " + format_double(model.initial_train_mse),
                              state.step);
    }
    model.net = std::move(net);
    return model;
}

VectorXd predict(const RefitModel& m, const MatrixXd& x_new) {
    const auto k = static_cast<Index>(m.feature_indices.size());
    MatrixXd cols;
    if (x_new.cols() == k) {
        cols = x_new;
    } else if (x_new.cols() == m.training_p) {
        cols.resize(x_new.rows(), k);
        for (Index c = 0; c < k; ++c) cols.col(c) = x_new.col(m.feature_indices[static_cast<std::size_t>(c)]);
    } else {
        throw DimensionError("prediction input has " + std::to_string(x_new.cols()) + " columns; model expects " +
                             std::to_string(k) + " (selected) or " + std::to_string(m.training_p) + " (full)");
    }
    const VectorXd out = m.net.forward(prepare_inputs(m, cols));
    return (out.array() * m.target_scale + m.target_mean).matrix();
}

VectorXd predict(const RefitModel& m, const Dataset& d) {
    std::vector<Index> columns;
    std::vector<std::string> missing;
    for (const auto& id : m.feature_ids) {
        const Index j = d.find_feature(id);
        if (j < 0) missing.push_back(id);
        else columns.push_back(j);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw DimensionError("model features absent from data: " + list);
    }
    return predict(m, d.select_columns(columns).x());
}

double evaluate_mse(const RefitModel& m, const Dataset& d_test) {
    const VectorXd pred = predict(m, d_test);
    return (pred - d_test.y()).squaredNorm() / static_cast<double>(d_test.n());
}

}  // namespace steinselect
