#pragma once

// Non-learning reference controller: fixed-period lights cycling all four
// phases with one equal duration, independent of traffic state.

#include "tsc/sim.hpp"

namespace tsc {

struct FixedPolicy {
    int phase_duration_s = 30;

    void validate() const {
        if (phase_duration_s <= 0) throw SimError("fixed phase duration must be positive");
    }
    int cycle_length_s() const { return 4 * phase_duration_s; }
};

inline TrafficLight fixed_light(NodeId intersection, const FixedPolicy& policy) {
    policy.validate();
    int d = policy.phase_duration_s;
    return make_light(intersection, {d, d, d, d});
}

}  // namespace tsc
