#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tsc/net.hpp"

using namespace tsc;

namespace {

// central finite differences of the batch loss over every parameter
std::vector<double> numeric_gradient(Mlp net, const std::vector<std::vector<double>>& inputs,
                                     const std::vector<int>& actions,
                                     const std::vector<double>& targets, double h) {
    Gradients scratch;
    std::vector<double> g(net.param_count());
    for (std::size_t k = 0; k < net.param_count(); ++k) {
        double orig = net.get_param(k);
        net.set_param(k, orig + h);
        double up = mse_loss_and_gradient(net, inputs, actions, targets, scratch);
        net.set_param(k, orig - h);
        double down = mse_loss_and_gradient(net, inputs, actions, targets, scratch);
        net.set_param(k, orig);
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("forward pass basics") {
    SECTION("zero parameters map everything to zero") {
        Mlp net({4, 24, 24, 24, 4});
        auto out = net.forward(std::vector<double>{1.0, 2.0, 3.0, 4.0});
        CHECK(out == std::vector<double>{0.0, 0.0, 0.0, 0.0});
    }
    SECTION("single-path network matches the hand-traced value") {
        // 1 -> 1 -> 1 with w1=2, b1=1, w2=3, b2=0.5
        Mlp net({1, 1, 1});
        net.layer_weights(0)[0] = 2.0;
        net.layer_biases(0)[0] = 1.0;
        net.layer_weights(1)[0] = 3.0;
        net.layer_biases(1)[0] = 0.5;
        // relu(2*1.5 + 1) = 4, then 3*4 + 0.5 = 12.5
        CHECK(net.forward(std::vector<double>{1.5})[0] == Catch::Approx(12.5));
        // negative pre-activation clamps to zero: output = bias alone
        CHECK(net.forward(std::vector<double>{-1.0})[0] == Catch::Approx(0.5));
    }
    SECTION("forward is deterministic") {
        Mlp net = Mlp::glorot({4, 24, 24, 24, 4}, 99);
        std::vector<double> x = {0.2, 0.4, 0.0, 1.0};
        CHECK(net.forward(x) == net.forward(x));
    }
    SECTION("non-finite input is rejected") {
        Mlp net = Mlp::glorot({4, 8, 4}, 1);
        std::vector<double> x = {0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0};
        CHECK_THROWS_AS(net.forward(x), NetError);
        std::vector<double> bad_size = {0.0, 1.0};
        CHECK_THROWS_AS(net.forward(bad_size), NetError);
    }
}

TEST_CASE("glorot initialization stays within the fan bounds") {
    Mlp net = Mlp::glorot({4, 24, 24, 24, 4}, 7);
    CHECK(net.finite());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        double limit = std::sqrt(6.0 / (net.in_dim(l) + net.out_dim(l)));
        for (double w : net.layer_weights(l)) {
            CHECK(w <= limit);
            CHECK(w >= -limit);
        }
        for (double b : net.layer_biases(l)) CHECK(b == 0.0);
    }
    Mlp other = Mlp::glorot({4, 24, 24, 24, 4}, 8);
    CHECK(net.layer_weights(0) != other.layer_weights(0));
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mlp net = Mlp::glorot({4, 3, 4}, 55);

    for (int batch_trial = 0; batch_trial < 5; ++batch_trial) {
        std::vector<std::vector<double>> inputs;
        std::vector<int> actions;
        std::vector<double> targets;
        for (int b = 0; b < 8; ++b) {
            inputs.push_back({u(rng), u(rng), u(rng), u(rng)});
            actions.push_back(static_cast<int>(rng() % 4));
            targets.push_back(u(rng));
        }
        Gradients grad;
        mse_loss_and_gradient(net, inputs, actions, targets, grad);
        auto numeric = numeric_gradient(net, inputs, actions, targets, 1e-5);

        std::size_t k = 0;
        double max_rel = 0.0;
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            for (double g : grad.weights[l]) {
                double rel = std::abs(g - numeric[k]) / std::max({std::abs(g), std::abs(numeric[k]), 1e-8});
                max_rel = std::max(max_rel, rel);
                ++k;
            }
            for (double g : grad.biases[l]) {
                double rel = std::abs(g - numeric[k]) / std::max({std::abs(g), std::abs(numeric[k]), 1e-8});
                max_rel = std::max(max_rel, rel);
                ++k;
            }
        }
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("scaling the output layer never changes the greedy action") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Mlp net = Mlp::glorot({4, 24, 24, 24, 4}, 3);
    for (double& b : net.layer_biases(net.layer_count() - 1)) b = u(rng);

    for (double lambda : {0.25, 1.0, 3.0, 42.0}) {
        Mlp scaled = net;
        std::size_t last = scaled.layer_count() - 1;
        for (double& w : scaled.layer_weights(last)) w *= lambda;
        for (double& b : scaled.layer_biases(last)) b *= lambda;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x = {u(rng), u(rng), u(rng), u(rng)};
            auto q1 = net.forward(x);
            auto q2 = scaled.forward(x);
            auto argmax = [](const std::vector<double>& q) {
                return std::distance(q.begin(), std::max_element(q.begin(), q.end()));
            };
            CHECK(argmax(q1) == argmax(q2));
        }
    }
}

TEST_CASE("adam drives a fixed regression target to convergence") {
    Mlp net = Mlp::glorot({2, 8, 2}, 21);
    AdamOptimizer adam(net, 0.01);
    std::vector<std::vector<double>> inputs = {{1.0, 0.5}};
    std::vector<int> actions = {1};
    std::vector<double> targets = {2.0};
    Gradients grad;
    double loss = mse_loss_and_gradient(net, inputs, actions, targets, grad);
    for (int i = 0; i < 200; ++i) {
        adam.step(net, grad);
        loss = mse_loss_and_gradient(net, inputs, actions, targets, grad);
    }
    CHECK(loss < 1e-3);
    CHECK(adam.step_count() == 200);
}

TEST_CASE("zero gradient leaves parameters untouched") {
    // predictions already equal targets -> loss 0, no movement
    Mlp net({4, 6, 4});  // zero parameters mean all outputs are 0
    AdamOptimizer adam(net, 0.001);
    std::vector<std::vector<double>> inputs = {{0.3, 0.1, 0.0, 0.9}, {1.0, 0.0, 0.0, 0.0}};
    std::vector<int> actions = {0, 2};
    std::vector<double> targets = {0.0, 0.0};
    Gradients grad;
    double loss = mse_loss_and_gradient(net, inputs, actions, targets, grad);
    CHECK(loss == 0.0);
    Mlp before = net;
    adam.step(net, grad);
    for (std::size_t k = 0; k < net.param_count(); ++k)
        CHECK(net.get_param(k) == before.get_param(k));
}
