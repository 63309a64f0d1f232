#include "dsb/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dsb::nn {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
    }
    throw std::logic_error("activation_name: unknown activation");
}

Activation activation_from_name(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation: " + std::string(name));
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& s, Activation a) {
    switch (a) {
        case Activation::identity: return s;
        case Activation::relu: return s.cwiseMax(0.0);
        case Activation::tanh: return s.array().tanh().matrix();
    }
    throw std::logic_error("activate: unknown activation");
}

// Derivative expressed through the activation value; valid for all three
// supported functions (relu uses output > 0, taking subgradient 0 at the kink).
Eigen::MatrixXd activate_grad_from_output(const Eigen::MatrixXd& a, Activation act) {
    switch (act) {
        case Activation::identity: return Eigen::MatrixXd::Ones(a.rows(), a.cols());
        case Activation::relu:
            return (a.array() > 0.0).cast<double>().matrix();
        case Activation::tanh: return (1.0 - a.array().square()).matrix();
    }
    throw std::logic_error("activate_grad_from_output: unknown activation");
}

}  // namespace

DenseLayer glorot_layer(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng) {
    if (in < 1 || out < 1) throw std::invalid_argument("glorot_layer: dimensions must be >= 1");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index i = 0; i < out; ++i)
        for (Eigen::Index j = 0; j < in; ++j)
            layer.weights(i, j) = limit * (2.0 * rng.uniform01() - 1.0);
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = act;
    return layer;
}

std::vector<Eigen::MatrixXd> forward(const std::vector<DenseLayer>& layers,
                                     const Eigen::MatrixXd& input) {
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(layers.size() + 1);
    acts.push_back(input);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (acts.back().cols() != layer.weights.cols())
            throw std::invalid_argument("forward: input width " + std::to_string(acts.back().cols()) +
                                        " does not match layer " + std::to_string(l) + " fan-in " +
                                        std::to_string(layer.weights.cols()));
        Eigen::MatrixXd s = acts.back() * layer.weights.transpose();
        s.rowwise() += layer.bias.transpose();
        Eigen::MatrixXd a = activate(s, layer.activation);
        if (!a.allFinite())
            throw std::runtime_error("forward: non-finite output at layer " + std::to_string(l));
        acts.push_back(std::move(a));
    }
    return acts;
}

Eigen::MatrixXd apply(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& input) {
    return forward(layers, input).back();
}

BackwardResult backward(const std::vector<DenseLayer>& layers,
                        const std::vector<Eigen::MatrixXd>& activations,
                        const Eigen::MatrixXd& output_gradient) {
    if (activations.size() != layers.size() + 1)
        throw std::invalid_argument("backward: trace length does not match layer count");
    if (output_gradient.rows() != activations.back().rows() ||
        output_gradient.cols() != activations.back().cols())
        throw std::invalid_argument("backward: output gradient shape mismatch");

    BackwardResult res;
    res.param_grad.resize(static_cast<Eigen::Index>(param_count(layers)));
    Eigen::Index offset = res.param_grad.size();
    Eigen::MatrixXd g = output_gradient;
    for (std::size_t li = layers.size(); li-- > 0;) {
        const auto& layer = layers[li];
        const Eigen::MatrixXd& a_out = activations[li + 1];
        const Eigen::MatrixXd& a_in = activations[li];
        Eigen::MatrixXd gs = g.cwiseProduct(activate_grad_from_output(a_out, layer.activation));
        Eigen::MatrixXd gw = gs.transpose() * a_in;              // out x in
        Eigen::VectorXd gb = gs.colwise().sum().transpose();     // out
        g = gs * layer.weights;                                  // batch x in

        offset -= gb.size();
        res.param_grad.segment(offset, gb.size()) = gb;
        offset -= gw.size();
        for (Eigen::Index i = 0; i < gw.rows(); ++i)
            res.param_grad.segment(offset + i * gw.cols(), gw.cols()) = gw.row(i);
    }
    res.input_grad = std::move(g);
    return res;
}

std::size_t param_count(const std::vector<DenseLayer>& layers) {
    std::size_t n = 0;
    for (const auto& l : layers)
        n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

Eigen::VectorXd flatten(const std::vector<DenseLayer>& layers) {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count(layers)));
    Eigen::Index off = 0;
    for (const auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
            flat.segment(off, l.weights.cols()) = l.weights.row(i);
            off += l.weights.cols();
        }
        flat.segment(off, l.bias.size()) = l.bias;
        off += l.bias.size();
    }
    return flat;
}

void unflatten(const Eigen::VectorXd& flat, std::vector<DenseLayer>& layers) {
    if (static_cast<std::size_t>(flat.size()) != param_count(layers))
        throw std::invalid_argument("unflatten: flat length does not match layer shapes");
    Eigen::Index off = 0;
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
            l.weights.row(i) = flat.segment(off, l.weights.cols());
            off += l.weights.cols();
        }
        l.bias = flat.segment(off, l.bias.size());
        off += l.bias.size();
    }
}

OptimizerState make_optimizer(std::size_t n_params, double learning_rate) {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("make_optimizer: learning rate must be positive");
    OptimizerState st;
    st.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params));
    st.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params));
    st.learning_rate = learning_rate;
    return st;
}

void adam_step(OptimizerState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (params.size() != state.m.size() || grad.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    if (!grad.allFinite())
        throw std::runtime_error("adam_step: non-finite gradient");
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const Eigen::ArrayXd m_hat = state.m.array() / bc1;
    const Eigen::ArrayXd v_hat = state.v.array() / bc2;
    params.array() -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
}

Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& noise) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() || mu.rows() != noise.rows() ||
        mu.cols() != noise.cols())
        throw std::invalid_argument("reparameterize: shape mismatch");
    return mu.array() + (logvar.array() * 0.5).exp() * noise.array();
}

double kl_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
        throw std::invalid_argument("kl_gaussian: shape mismatch");
    if (!mu.allFinite() || !logvar.allFinite())
        throw std::invalid_argument("kl_gaussian: non-finite input");
    const double per_batch =
        0.5 * (logvar.array().exp() + mu.array().square() - 1.0 - logvar.array()).sum();
    return per_batch / static_cast<double>(mu.rows());
}

Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
    return out;
}

}  // namespace dsb::nn
