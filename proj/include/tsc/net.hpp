#pragma once

// Fully connected network with ReLU hidden layers and a linear output,
// trained by minibatch MSE on selected outputs with Adam. Double precision
// throughout so gradients can be checked against finite differences.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace tsc {

struct NetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Mlp {
public:
    Mlp() = default;

    explicit Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
        if (sizes_.size() < 2) throw NetError("network needs at least input and output layers");
        for (int s : sizes_)
            if (s <= 0) throw NetError("layer sizes must be positive");
        weights_.resize(layer_count());
        biases_.resize(layer_count());
        for (std::size_t l = 0; l < layer_count(); ++l) {
            weights_[l].assign(static_cast<std::size_t>(out_dim(l)) * in_dim(l), 0.0);
            biases_[l].assign(static_cast<std::size_t>(out_dim(l)), 0.0);
        }
    }

    // Uniform init in +-sqrt(6 / (fan_in + fan_out)) per layer.
    static Mlp glorot(std::vector<int> layer_sizes, std::uint64_t seed) {
        Mlp net(std::move(layer_sizes));
        std::mt19937_64 rng(seed);
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            double limit = std::sqrt(6.0 / (net.in_dim(l) + net.out_dim(l)));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (double& w : net.weights_[l]) w = dist(rng);
        }
        return net;
    }

    std::size_t layer_count() const { return sizes_.size() - 1; }
    int in_dim(std::size_t layer) const { return sizes_[layer]; }
    int out_dim(std::size_t layer) const { return sizes_[layer + 1]; }
    const std::vector<int>& sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }

    std::vector<double>& layer_weights(std::size_t l) { return weights_[l]; }
    std::vector<double>& layer_biases(std::size_t l) { return biases_[l]; }
    const std::vector<double>& layer_weights(std::size_t l) const { return weights_[l]; }
    const std::vector<double>& layer_biases(std::size_t l) const { return biases_[l]; }

    std::vector<double> forward(std::span<const double> input) const {
        check_input(input);
        std::vector<double> act(input.begin(), input.end());
        for (std::size_t l = 0; l < layer_count(); ++l) {
            act = affine(l, act);
            if (l + 1 < layer_count())
                for (double& v : act) v = v > 0.0 ? v : 0.0;
        }
        return act;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layer_count(); ++l)
            n += weights_[l].size() + biases_[l].size();
        return n;
    }

    double get_param(std::size_t idx) const {
        auto [l, is_bias, off] = locate(idx);
        return is_bias ? biases_[l][off] : weights_[l][off];
    }

    void set_param(std::size_t idx, double value) {
        auto [l, is_bias, off] = locate(idx);
        (is_bias ? biases_[l][off] : weights_[l][off]) = value;
    }

    bool finite() const {
        for (std::size_t l = 0; l < layer_count(); ++l) {
            for (double w : weights_[l])
                if (!std::isfinite(w)) return false;
            for (double b : biases_[l])
                if (!std::isfinite(b)) return false;
        }
        return true;
    }

private:
    friend struct Gradients;
    friend class AdamOptimizer;

    void check_input(std::span<const double> input) const {
        if (static_cast<int>(input.size()) != input_size()) throw NetError("input size mismatch");
        for (double v : input)
            if (!std::isfinite(v)) throw NetError("non-finite network input");
    }

    std::vector<double> affine(std::size_t l, const std::vector<double>& in) const {
        std::vector<double> out(biases_[l]);
        const int rows = out_dim(l), cols = in_dim(l);
        for (int r = 0; r < rows; ++r) {
            const double* wrow = &weights_[l][static_cast<std::size_t>(r) * cols];
            double acc = 0.0;
            for (int c = 0; c < cols; ++c) acc += wrow[c] * in[static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r)] += acc;
        }
        return out;
    }

    struct ParamRef {
        std::size_t layer;
        bool is_bias;
        std::size_t offset;
    };

    ParamRef locate(std::size_t idx) const {
        for (std::size_t l = 0; l < layer_count(); ++l) {
            if (idx < weights_[l].size()) return {l, false, idx};
            idx -= weights_[l].size();
            if (idx < biases_[l].size()) return {l, true, idx};
            idx -= biases_[l].size();
        }
        throw NetError("parameter index out of range");
    }

    std::vector<int> sizes_;
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<double>> biases_;
};

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const Mlp& net) {
        Gradients g;
        g.weights.resize(net.layer_count());
        g.biases.resize(net.layer_count());
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            g.weights[l].assign(net.layer_weights(l).size(), 0.0);
            g.biases[l].assign(net.layer_biases(l).size(), 0.0);
        }
        return g;
    }
};

// Minibatch loss L = mean_b (target_b - Q(input_b)[action_b])^2 and its
// gradient with respect to every weight and bias.
inline double mse_loss_and_gradient(const Mlp& net, std::span<const std::vector<double>> inputs,
                                    std::span<const int> actions, std::span<const double> targets,
                                    Gradients& grad) {
    const std::size_t batch = inputs.size();
    if (batch == 0 || actions.size() != batch || targets.size() != batch)
        throw NetError("minibatch arrays must be non-empty and equally sized");
    grad = Gradients::zeros_like(net);
    const std::size_t layers = net.layer_count();
    double loss = 0.0;

    std::vector<std::vector<double>> acts(layers + 1);  // post-activation per layer
    std::vector<std::vector<double>> pre(layers);       // pre-activation per layer
    for (std::size_t b = 0; b < batch; ++b) {
        acts[0].assign(inputs[b].begin(), inputs[b].end());
        if (static_cast<int>(acts[0].size()) != net.input_size()) throw NetError("input size mismatch");
        for (std::size_t l = 0; l < layers; ++l) {
            const int rows = net.out_dim(l), cols = net.in_dim(l);
            const auto& w = net.layer_weights(l);
            const auto& bias = net.layer_biases(l);
            pre[l].assign(bias.begin(), bias.end());
            for (int r = 0; r < rows; ++r) {
                const double* wrow = &w[static_cast<std::size_t>(r) * cols];
                double acc = 0.0;
                for (int c = 0; c < cols; ++c) acc += wrow[c] * acts[l][static_cast<std::size_t>(c)];
                pre[l][static_cast<std::size_t>(r)] += acc;
            }
            acts[l + 1] = pre[l];
            if (l + 1 < layers)
                for (double& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;
        }

        const int a = actions[b];
        if (a < 0 || a >= net.output_size()) throw NetError("action index outside network output");
        const double q = acts[layers][static_cast<std::size_t>(a)];
        const double err = q - targets[b];
        loss += err * err;

        // backward pass; only the selected output carries error
        std::vector<double> delta(static_cast<std::size_t>(net.output_size()), 0.0);
        delta[static_cast<std::size_t>(a)] = 2.0 * err / static_cast<double>(batch);
        for (std::size_t l = layers; l-- > 0;) {
            const int rows = net.out_dim(l), cols = net.in_dim(l);
            auto& gw = grad.weights[l];
            auto& gb = grad.biases[l];
            for (int r = 0; r < rows; ++r) {
                const double d = delta[static_cast<std::size_t>(r)];
                if (d == 0.0) continue;
                gb[static_cast<std::size_t>(r)] += d;
                double* gwrow = &gw[static_cast<std::size_t>(r) * cols];
                for (int c = 0; c < cols; ++c) gwrow[c] += d * acts[l][static_cast<std::size_t>(c)];
            }
            if (l == 0) break;
            std::vector<double> prev(static_cast<std::size_t>(cols), 0.0);
            const auto& w = net.layer_weights(l);
            for (int r = 0; r < rows; ++r) {
                const double d = delta[static_cast<std::size_t>(r)];
                if (d == 0.0) continue;
                const double* wrow = &w[static_cast<std::size_t>(r) * cols];
                for (int c = 0; c < cols; ++c) prev[static_cast<std::size_t>(c)] += d * wrow[c];
            }
            for (int c = 0; c < cols; ++c)
                if (pre[l - 1][static_cast<std::size_t>(c)] <= 0.0) prev[static_cast<std::size_t>(c)] = 0.0;
            delta = std::move(prev);
        }
    }
    return loss / static_cast<double>(batch);
}

class AdamOptimizer {
public:
    explicit AdamOptimizer(const Mlp& net, double learning_rate, double beta1 = 0.9,
                           double beta2 = 0.999, double epsilon = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon),
          m_(Gradients::zeros_like(net)), v_(Gradients::zeros_like(net)) {}

    void step(Mlp& net, const Gradients& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            update(net.layer_weights(l), grad.weights[l], m_.weights[l], v_.weights[l], c1, c2);
            update(net.layer_biases(l), grad.biases[l], m_.biases[l], v_.biases[l], c1, c2);
        }
        if (!net.finite()) throw NetError("non-finite parameters after optimizer step");
    }

    long step_count() const { return t_; }
    double learning_rate() const { return lr_; }

    // checkpoint access
    Gradients& first_moments() { return m_; }
    Gradients& second_moments() { return v_; }
    const Gradients& first_moments() const { return m_; }
    const Gradients& second_moments() const { return v_; }
    void restore_step_count(long t) { t_ = t; }

private:
    void update(std::vector<double>& params, const std::vector<double>& g, std::vector<double>& m,
                std::vector<double>& v, double c1, double c2) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            params[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }

    double lr_ = 0.001;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long t_ = 0;
    Gradients m_, v_;
};

}  // namespace tsc
