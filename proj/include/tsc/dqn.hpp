#pragma once

// Deep Q-learning: epsilon-greedy action selection, ring-buffer experience
// replay (uniform by default, proportional prioritization optional), MSE
// loss against a frozen target network, Adam updates, soft or hard target
// synchronization, and a binary checkpoint format.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsc/mdp.hpp"
#include "tsc/net.hpp"

namespace tsc {

struct Hyperparams {
    double learning_rate = 0.001;
    double gamma = 0.95;
    double epsilon_initial = 0.95;
    double epsilon_final = 0.01;
    double epsilon_decay = 0.001;
    int minibatch = 32;
    int memory = 10000;
    double target_beta = 0.01;         // soft-update rate
    bool hard_target_sync = false;     // alternative: full copy every N train steps
    int hard_sync_period = 100;
    bool prioritized_replay = false;
    int train_steps_per_decision = 4;  // minibatch updates per agent decision

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw NetError("gamma must be in [0,1)");
        if (!(learning_rate > 0.0)) throw NetError("learning rate must be positive");
        if (epsilon_initial < epsilon_final || epsilon_final < 0.0 || epsilon_initial > 1.0)
            throw NetError("epsilon schedule must satisfy 0 <= final <= initial <= 1");
        if (epsilon_decay < 0.0) throw NetError("epsilon decay must be nonnegative");
        if (minibatch <= 0 || memory < minibatch) throw NetError("memory must hold at least one minibatch");
        if (!(target_beta >= 0.0 && target_beta <= 1.0)) throw NetError("target beta must be in [0,1]");
        if (hard_sync_period <= 0) throw NetError("hard sync period must be positive");
        if (train_steps_per_decision <= 0) throw NetError("train steps per decision must be positive");
    }
};

// Exponential schedule from epsilon_initial down to epsilon_final.
inline double epsilon_at(long step, const Hyperparams& hp) {
    if (step < 0) throw NetError("epsilon step must be nonnegative");
    return hp.epsilon_final +
           (hp.epsilon_initial - hp.epsilon_final) * std::exp(-hp.epsilon_decay * static_cast<double>(step));
}

// Greedy on the Q-values with probability 1-epsilon, uniform otherwise.
// Ties break toward the lowest action index.
inline int select_action(const Mlp& net, std::span<const double> input, double epsilon,
                         std::mt19937_64& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) throw NetError("epsilon must be in [0,1]");
    const int n = net.output_size();
    if (epsilon > 0.0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < epsilon) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            return pick(rng);
        }
    }
    std::vector<double> q = net.forward(input);
    int best = 0;
    for (int a = 1; a < n; ++a)
        if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
    return best;
}

// r + gamma * max_a' Q_target(s', a'); terminal transitions use r alone.
inline double td_target(const Mlp& target_net, double reward, std::span<const double> next_input,
                        double gamma, bool terminal) {
    if (terminal) return reward;
    std::vector<double> q = target_net.forward(next_input);
    return reward + gamma * *std::max_element(q.begin(), q.end());
}

class ReplayMemory {
public:
    explicit ReplayMemory(int capacity) : capacity_(static_cast<std::size_t>(capacity)) {
        if (capacity <= 0) throw NetError("replay capacity must be positive");
    }

    void store(const Transition& t) {
        if (buffer_.size() < capacity_) {
            buffer_.push_back(t);
            priorities_.push_back(max_priority_);
        } else {
            buffer_[cursor_] = t;
            priorities_[cursor_] = max_priority_;
            cursor_ = (cursor_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return buffer_[i]; }

    std::size_t sample_uniform(std::mt19937_64& rng) const {
        std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
        return pick(rng);
    }

    std::size_t sample_proportional(std::mt19937_64& rng) const {
        double total = 0.0;
        for (double p : priorities_) total += p;
        std::uniform_real_distribution<double> dist(0.0, total);
        double u = dist(rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < priorities_.size(); ++i) {
            acc += priorities_[i];
            if (u <= acc) return i;
        }
        return priorities_.size() - 1;
    }

    void update_priority(std::size_t i, double priority) {
        priorities_[i] = priority;
        max_priority_ = std::max(max_priority_, priority);
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    double max_priority_ = 1.0;
    std::vector<Transition> buffer_;
    std::vector<double> priorities_;
};

// Soft update: target <- (1-beta)*target + beta*online.
inline void sync_target_soft(const Mlp& net, Mlp& target, double beta) {
    if (net.sizes() != target.sizes()) throw NetError("network shape mismatch in target sync");
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        auto& tw = target.layer_weights(l);
        auto& tb = target.layer_biases(l);
        const auto& w = net.layer_weights(l);
        const auto& b = net.layer_biases(l);
        for (std::size_t i = 0; i < tw.size(); ++i) tw[i] = (1.0 - beta) * tw[i] + beta * w[i];
        for (std::size_t i = 0; i < tb.size(); ++i) tb[i] = (1.0 - beta) * tb[i] + beta * b[i];
    }
}

inline void sync_target_hard(const Mlp& net, Mlp& target) {
    if (net.sizes() != target.sizes()) throw NetError("network shape mismatch in target sync");
    target = net;
}

// One agent's learning state: online network, frozen target, replay
// memory, optimizer, and the normalization scale applied to state vectors
// before they reach the network.
class QLearner {
public:
    QLearner(std::vector<int> layer_sizes, const Hyperparams& hp, std::uint64_t seed,
             double state_scale)
        : hp_(hp),
          net_(Mlp::glorot(layer_sizes, seed)),
          target_(net_),
          adam_(net_, hp.learning_rate),
          memory_(hp.memory),
          state_scale_(state_scale) {
        hp_.validate();
        if (!(state_scale_ > 0.0)) throw NetError("state scale must be positive");
    }

    std::vector<double> encode(const StateVector& s) const {
        std::vector<double> x(4);
        for (int i = 0; i < 4; ++i) x[static_cast<std::size_t>(i)] = s[i] / state_scale_;
        return x;
    }

    int act(const StateVector& s, double epsilon, std::mt19937_64& rng) const {
        return select_action(net_, encode(s), epsilon, rng);
    }

    void remember(const Transition& t) { memory_.store(t); }

    // One minibatch update. Targets come exclusively from the frozen
    // target network. Returns the pre-update loss, or nothing when the
    // memory cannot fill a minibatch yet.
    std::optional<double> train_step(std::mt19937_64& rng) {
        if (memory_.size() < static_cast<std::size_t>(hp_.minibatch)) return std::nullopt;
        const std::size_t batch = static_cast<std::size_t>(hp_.minibatch);
        std::vector<std::size_t> idx(batch);
        std::vector<std::vector<double>> inputs(batch);
        std::vector<int> actions(batch);
        std::vector<double> targets(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            idx[b] = hp_.prioritized_replay ? memory_.sample_proportional(rng)
                                            : memory_.sample_uniform(rng);
            const Transition& t = memory_.at(idx[b]);
            inputs[b] = encode(t.state);
            actions[b] = t.action;
            targets[b] = td_target(target_, t.reward, encode(t.next_state), hp_.gamma, t.terminal);
        }
        Gradients grad;
        double loss = mse_loss_and_gradient(net_, inputs, actions, targets, grad);
        if (hp_.prioritized_replay) {
            for (std::size_t b = 0; b < batch; ++b) {
                double q = net_.forward(inputs[b])[static_cast<std::size_t>(actions[b])];
                memory_.update_priority(idx[b], std::abs(targets[b] - q) + 0.01);
            }
        }
        adam_.step(net_, grad);
        ++train_steps_;
        if (hp_.hard_target_sync) {
            if (train_steps_ % hp_.hard_sync_period == 0) sync_target_hard(net_, target_);
        } else {
            sync_target_soft(net_, target_, hp_.target_beta);
        }
        return loss;
    }

    const Mlp& net() const { return net_; }
    Mlp& net() { return net_; }
    const Mlp& target() const { return target_; }
    ReplayMemory& memory() { return memory_; }
    const ReplayMemory& memory() const { return memory_; }
    const Hyperparams& hyperparams() const { return hp_; }
    long train_steps() const { return train_steps_; }

    void set_epsilon_step(long s) { epsilon_step_ = s; }
    long epsilon_step() const { return epsilon_step_; }
    double current_epsilon() const { return epsilon_at(epsilon_step_, hp_); }

    void save(const std::string& path) const;
    static QLearner load(const std::string& path, const Hyperparams& hp, double state_scale);

private:
    QLearner(const Hyperparams& hp, Mlp net, double state_scale)
        : hp_(hp), net_(std::move(net)), target_(net_), adam_(net_, hp.learning_rate),
          memory_(hp.memory), state_scale_(state_scale) {}

    Hyperparams hp_;
    Mlp net_;
    Mlp target_;
    AdamOptimizer adam_;
    ReplayMemory memory_;
    double state_scale_ = 1.0;
    long train_steps_ = 0;
    long epsilon_step_ = 0;
};

// --- checkpoint container -------------------------------------------------
//
// Little-endian binary layout:
//   magic   "TSQN"            4 bytes
//   version u32               currently 1
//   layers  u32               number of entries in the size list
//   sizes   u32 * layers
//   online network doubles    per layer: weights row-major, then biases
//   target network doubles    same layout
//   adam t  u64
//   adam m  doubles, same layout as one network
//   adam v  doubles, same layout as one network
//   epsilon step u64
// Replay memory is not persisted.

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline void put_doubles(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
inline std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
inline void get_doubles(std::istream& is, std::vector<double>& v) {
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
inline void put_net(std::ostream& os, const Mlp& net) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        put_doubles(os, net.layer_weights(l));
        put_doubles(os, net.layer_biases(l));
    }
}
inline void get_net(std::istream& is, Mlp& net) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        get_doubles(is, net.layer_weights(l));
        get_doubles(is, net.layer_biases(l));
    }
}
}  // namespace detail

inline void QLearner::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw NetError("cannot write checkpoint: " + path);
    os.write("TSQN", 4);
    detail::put_u32(os, 1);
    detail::put_u32(os, static_cast<std::uint32_t>(net_.sizes().size()));
    for (int s : net_.sizes()) detail::put_u32(os, static_cast<std::uint32_t>(s));
    detail::put_net(os, net_);
    detail::put_net(os, target_);
    detail::put_u64(os, static_cast<std::uint64_t>(adam_.step_count()));
    for (std::size_t l = 0; l < net_.layer_count(); ++l) {
        detail::put_doubles(os, adam_.first_moments().weights[l]);
        detail::put_doubles(os, adam_.first_moments().biases[l]);
    }
    for (std::size_t l = 0; l < net_.layer_count(); ++l) {
        detail::put_doubles(os, adam_.second_moments().weights[l]);
        detail::put_doubles(os, adam_.second_moments().biases[l]);
    }
    detail::put_u64(os, static_cast<std::uint64_t>(epsilon_step_));
    if (!os) throw NetError("checkpoint write failed: " + path);
}

inline QLearner QLearner::load(const std::string& path, const Hyperparams& hp, double state_scale) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NetError("cannot read checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TSQN", 4) != 0) throw NetError("bad checkpoint magic");
    if (detail::get_u32(is) != 1) throw NetError("unsupported checkpoint version");
    std::uint32_t n_sizes = detail::get_u32(is);
    if (n_sizes < 2 || n_sizes > 64) throw NetError("corrupt checkpoint size list");
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) s = static_cast<int>(detail::get_u32(is));
    Mlp net(sizes);
    detail::get_net(is, net);
    QLearner q(hp, std::move(net), state_scale);
    detail::get_net(is, q.target_);
    q.adam_.restore_step_count(static_cast<long>(detail::get_u64(is)));
    for (std::size_t l = 0; l < q.net_.layer_count(); ++l) {
        detail::get_doubles(is, q.adam_.first_moments().weights[l]);
        detail::get_doubles(is, q.adam_.first_moments().biases[l]);
    }
    for (std::size_t l = 0; l < q.net_.layer_count(); ++l) {
        detail::get_doubles(is, q.adam_.second_moments().weights[l]);
        detail::get_doubles(is, q.adam_.second_moments().biases[l]);
    }
    q.epsilon_step_ = static_cast<long>(detail::get_u64(is));
    if (!is) throw NetError("checkpoint truncated: " + path);
    return q;
}

}  // namespace tsc
