#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dsb/rng.hpp"

namespace dsb::nn {

enum class Activation { identity, relu, tanh };

std::string activation_name(Activation a);
Activation activation_from_name(std::string_view name);

/// One fully connected layer: out = act(W * in + b), applied row-wise to a
/// batch (rows = samples).
struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::identity;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero bias, filled in a
/// fixed order so the result depends only on the generator state.
DenseLayer glorot_layer(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng);

/// Runs the stack and returns all activations: result[0] is the input,
/// result[l+1] the output of layer l. Throws if any layer output is
/// non-finite, naming the layer.
std::vector<Eigen::MatrixXd> forward(const std::vector<DenseLayer>& layers,
                                     const Eigen::MatrixXd& input);

/// forward(...).back() without keeping the trace.
Eigen::MatrixXd apply(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& input);

struct BackwardResult {
    Eigen::VectorXd param_grad;  // flat, same ordering as flatten()
    Eigen::MatrixXd input_grad;  // batch x in
};

/// Reverse-mode gradients through the stack given d(loss)/d(output).
/// `activations` must come from a matching forward call.
BackwardResult backward(const std::vector<DenseLayer>& layers,
                        const std::vector<Eigen::MatrixXd>& activations,
                        const Eigen::MatrixXd& output_gradient);

/// Flat parameter order: per layer, weights row-major, then bias.
std::size_t param_count(const std::vector<DenseLayer>& layers);
Eigen::VectorXd flatten(const std::vector<DenseLayer>& layers);
void unflatten(const Eigen::VectorXd& flat, std::vector<DenseLayer>& layers);

/// Adam-style moment state. Moment vectors match the flat parameter layout.
struct OptimizerState {
    long step = 0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

OptimizerState make_optimizer(std::size_t n_params, double learning_rate = 1e-3);

/// One bias-corrected update in place. Non-finite gradients abort.
void adam_step(OptimizerState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad);

/// z = mu + exp(logvar/2) .* noise
Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& noise);

/// Mean over batch rows of 0.5 * sum_j (exp(logvar) + mu^2 - 1 - logvar).
double kl_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar);

/// Standard-normal matrix drawn row-major from the generator.
Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace dsb::nn
