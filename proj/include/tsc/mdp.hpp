#pragma once

// Per-agent decision process: action semantics over next-cycle phase
// durations and the four reward variants (own/global x count/time).

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tsc/sim.hpp"
#include "tsc/v2x.hpp"

namespace tsc {

struct ActionSpec {
    int increment_s = 5;   // added to the chosen phase
    int min_phase_s = 10;
    int max_phase_s = 40;

    void validate() const {
        if (increment_s <= 0) throw SimError("action increment must be positive");
        if (min_phase_s <= 0 || max_phase_s < min_phase_s)
            throw SimError("phase duration bounds must satisfy 0 < min <= max");
    }
};

constexpr int kNumActions = 4;

// Chosen phase gains the increment; every other phase decays by the same
// amount toward the minimum. Keeps the cycle bounded so no action state
// can absorb the chain.
inline std::array<int, 4> apply_action(const TrafficLight& light, int action,
                                       const ActionSpec& spec) {
    spec.validate();
    if (action < 0 || action >= kNumActions) throw SimError("action index out of range");
    if (!light.at_cycle_boundary()) throw SimError("apply_action called mid-cycle");
    std::array<int, 4> next = light.phase_durations_s;
    for (int i = 0; i < 4; ++i) {
        if (i == action)
            next[static_cast<std::size_t>(i)] += spec.increment_s;
        else
            next[static_cast<std::size_t>(i)] -= spec.increment_s;
        next[static_cast<std::size_t>(i)] =
            std::clamp(next[static_cast<std::size_t>(i)], spec.min_phase_s, spec.max_phase_s);
    }
    return next;
}

struct RewardCase {
    int index = 1;        // 1: own counts, 2: own times, 3: global counts, 4: global times
    int w_sum_threshold = 50;

    void validate() const {
        if (index < 1 || index > 4) throw SimError("reward case must be in {1,2,3,4}");
        if (w_sum_threshold <= 0) throw SimError("W_sum threshold must be positive");
    }
};

// Reward in [0,1]. Cases 1-2 use only the agent's own lanes; cases 3-4 add
// every other agent's lanes. Case 1 zeroes out when the waiting-count sum
// reaches the W_sum threshold.
inline double reward(const RewardCase& rc, std::span<const LaneWaitStats> own,
                     std::span<const std::vector<LaneWaitStats>> others) {
    rc.validate();
    auto count_sum = [](std::span<const LaneWaitStats> stats) {
        double s = 0.0;
        for (const auto& st : stats) {
            if (st.waiting_count < 0 || st.waiting_time_s < 0.0)
                throw SimError("negative waiting statistics");
            s += st.waiting_count;
        }
        return s;
    };
    auto time_sum = [](std::span<const LaneWaitStats> stats) {
        double s = 0.0;
        for (const auto& st : stats) {
            if (st.waiting_count < 0 || st.waiting_time_s < 0.0)
                throw SimError("negative waiting statistics");
            s += st.waiting_time_s;
        }
        return s;
    };
    switch (rc.index) {
        case 1: {
            double own_counts = count_sum(own);
            if (own_counts >= rc.w_sum_threshold) return 0.0;
            return 1.0 / (1.0 + own_counts);
        }
        case 2:
            return 1.0 / (1.0 + time_sum(own));
        case 3: {
            double total = count_sum(own);
            for (const auto& b : others) total += count_sum(b);
            return 1.0 / (1.0 + total);
        }
        default: {
            double total = time_sum(own);
            for (const auto& b : others) total += time_sum(b);
            return 1.0 / (1.0 + total);
        }
    }
}

// The replay four-tuple <s, a, r, s'>.
struct Transition {
    StateVector state;
    int action = 0;
    double reward = 0.0;
    StateVector next_state;
    bool terminal = false;
};

// One sensing/acting binding per agent.
struct AgentBinding {
    NodeId intersection = -1;
    CoverageRegion region;
    WaitWindow window;
};

inline std::vector<std::vector<LaneWaitStats>> other_agent_stats(
    const World& world, std::span<const AgentBinding> agents, std::size_t self) {
    std::vector<std::vector<LaneWaitStats>> others;
    for (std::size_t b = 0; b < agents.size(); ++b) {
        if (b == self) continue;
        auto stats = agent_wait_stats(world, agents[b].intersection, agents[b].region, agents[b].window);
        others.emplace_back(stats.begin(), stats.end());
    }
    return others;
}

inline double agent_reward(const World& world, std::span<const AgentBinding> agents, std::size_t self,
                           const RewardCase& rc) {
    auto own = agent_wait_stats(world, agents[self].intersection, agents[self].region,
                                agents[self].window);
    std::vector<std::vector<LaneWaitStats>> others;
    if (rc.index >= 3) others = other_agent_stats(world, agents, self);
    return reward(rc, own, others);
}

// One synchronized decision round: every agent must stand at its cycle
// boundary. Senses all states against the same snapshot, applies every
// action, then steps the world until each agent finishes the cycle those
// durations define, capturing its reward and next state at that boundary.
using PolicyFn = std::function<int(std::size_t agent_index, const StateVector&)>;

inline std::vector<Transition> decision_cycle(World& world, std::span<AgentBinding> agents,
                                              const PolicyFn& policy, const RewardCase& rc,
                                              const ActionSpec& spec) {
    rc.validate();
    std::vector<StateVector> states(agents.size());
    for (std::size_t a = 0; a < agents.size(); ++a) {
        const TrafficLight& tl = world.light_at(agents[a].intersection);
        if (!tl.at_cycle_boundary()) throw SimError("decision_cycle needs all agents at a cycle boundary");
        states[a] = sense_state(world, agents[a].intersection, agents[a].region);
    }
    std::vector<int> actions(agents.size());
    for (std::size_t a = 0; a < agents.size(); ++a) {
        actions[a] = policy(a, states[a]);
        TrafficLight& tl = world.light_at(agents[a].intersection);
        tl.phase_durations_s = apply_action(tl, actions[a], spec);
        agents[a].window.reset();
    }
    std::vector<Transition> out(agents.size());
    std::vector<bool> done(agents.size(), false);
    std::size_t remaining = agents.size();
    while (remaining > 0) {
        world.spawn_pending();
        StepEvents ev = world.step();
        for (auto& agent : agents)
            agent.window.accumulate(world, agent.intersection, agent.region);
        for (NodeId n : ev.completed_cycles) {
            for (std::size_t a = 0; a < agents.size(); ++a) {
                if (done[a] || agents[a].intersection != n) continue;
                out[a] = Transition{states[a], actions[a],
                                    agent_reward(world, agents, a, rc),
                                    sense_state(world, agents[a].intersection, agents[a].region),
                                    false};
                done[a] = true;
                --remaining;
            }
        }
    }
    return out;
}

}  // namespace tsc
