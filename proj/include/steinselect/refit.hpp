#pragma once

#include "steinselect/dataset.hpp"
#include "steinselect/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace steinselect {

enum class Optimizer { sgd_momentum, adaptive_moment };

std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& text);

struct RefitConfig {
    std::vector<Index> hidden{64, 32};
    int epochs = 300;
    Index batch_size = 64;  // clipped to n
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::sgd_momentum;
    double momentum = 0.9;  // sgd_momentum only
    std::uint64_t seed = 0;
    bool standardize_inputs = true;

    void validate() const;
};

/// Fully connected layer, weights are out x in.
struct DenseLayer {
    MatrixXd weights;
    VectorXd bias;
};

/// ReLU network with a linear scalar output.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    /// Glorot-uniform weights in (-a, a), a = sqrt(6 / (fan_in + fan_out)); zero biases.
    static Mlp initialize(Index inputs, const std::vector<Index>& hidden, Rng& rng);

    /// `inputs` is features x batch; returns one prediction per column.
    VectorXd forward(const MatrixXd& inputs) const;

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    Index input_size() const;
    Index parameter_count() const;

    VectorXd parameters() const;
    void set_parameters(const VectorXd& flat);

private:
    std::vector<DenseLayer> layers_;
};

struct MlpGradient {
    double loss = 0.0;  // mean squared error over the batch
    std::vector<DenseLayer> layers;

    /// Same layout as Mlp::parameters().
    VectorXd flatten() const;
};

/// Loss and exact parameter gradient by backpropagation.
MlpGradient loss_gradient(const Mlp& net, const MatrixXd& inputs, const VectorXd& targets);

struct RefitModel {
    Mlp net;
    VectorXd input_mean;
    VectorXd input_scale;
    double target_mean = 0.0;
    double target_scale = 1.0;
    std::vector<std::string> feature_ids;
    std::vector<Index> feature_indices;  // columns of the training dataset
    Index training_p = 0;
    std::vector<double> loss_curve;      // mean minibatch MSE per epoch, response units
    double initial_train_mse = 0.0;
    double final_train_mse = 0.0;
};

/// Minimizes the training MSE by mini-batch gradient descent on the selected
/// (standardized) columns. The target is centred and scaled internally;
/// reported losses are in response units.
RefitModel train(const Dataset& d, const std::vector<Index>& selected, const RefitConfig& cfg);

/// Rows of `x_new` hold either the selected columns in model order or all
/// training columns.
VectorXd predict(const RefitModel& m, const MatrixXd& x_new);
/// Columns matched by feature id.
VectorXd predict(const RefitModel& m, const Dataset& d);

double evaluate_mse(const RefitModel& m, const Dataset& d_test);

}  // namespace steinselect
