#pragma once

// Circular-coverage sensing around an intersection. Agents see only the
// vehicles inside their coverage circle, on their own approach lanes.

#include <array>
#include <cmath>
#include <numbers>

#include "tsc/sim.hpp"

namespace tsc {

struct CoverageRegion {
    double center_x = 0.0;
    double center_y = 0.0;
    double radius_m = 0.0;

    bool contains(double x, double y) const {
        double dx = x - center_x;
        double dy = y - center_y;
        return dx * dx + dy * dy <= radius_m * radius_m;
    }
    double area_m2() const { return std::numbers::pi * radius_m * radius_m; }
};

inline double radius_from_area(double area_m2) {
    if (!(area_m2 > 0.0)) throw SimError("coverage area must be positive");
    return std::sqrt(area_m2 / std::numbers::pi);
}

inline CoverageRegion coverage_at(const RoadNetwork& net, NodeId intersection, double radius_m) {
    const Node& n = net.nodes.at(static_cast<std::size_t>(intersection));
    if (!n.is_intersection) throw SimError("coverage region must center on an intersection");
    return CoverageRegion{n.x, n.y, radius_m};
}

// Per-lane vehicle counts in N,E,S,W order; the agent's observation.
struct StateVector {
    std::array<int, 4> lanes{};

    int operator[](int i) const { return lanes[static_cast<std::size_t>(i)]; }
    int sum() const { return lanes[0] + lanes[1] + lanes[2] + lanes[3]; }
    bool operator==(const StateVector&) const = default;
};

struct LaneWaitStats {
    LaneId lane = -1;
    int waiting_count = 0;
    double waiting_time_s = 0.0;
};

namespace detail {
inline bool sensed(const World& world, const CoverageRegion& region, const Vehicle& v, LaneId lane) {
    if (v.state != VehicleState::Active || v.current_lane() != lane) return false;
    auto [x, y] = world.vehicle_xy(v);
    return region.contains(x, y);
}
}  // namespace detail

// Vehicles per approach lane that lie inside the coverage circle.
inline StateVector sense_state(const World& world, NodeId agent_intersection,
                               const CoverageRegion& region) {
    StateVector s;
    const auto& approaches = world.network().approach.at(static_cast<std::size_t>(agent_intersection));
    for (int d = 0; d < 4; ++d) {
        LaneId lane = approaches[static_cast<std::size_t>(d)];
        int count = 0;
        for (int vi : world.lane_occupants(lane))
            if (detail::sensed(world, region, world.vehicles()[static_cast<std::size_t>(vi)], lane))
                ++count;
        s.lanes[static_cast<std::size_t>(d)] = count;
    }
    return s;
}

// In-circle vehicles on `lane` currently slower than the waiting threshold.
inline int waiting_count(const World& world, const CoverageRegion& region, LaneId lane) {
    int count = 0;
    for (int vi : world.lane_occupants(lane)) {
        const Vehicle& v = world.vehicles()[static_cast<std::size_t>(vi)];
        if (v.speed_mps < world.params().wait_speed_threshold_mps &&
            detail::sensed(world, region, v, lane))
            ++count;
    }
    return count;
}

// Accumulates waiting time per approach between agent decision points:
// each step adds one second per currently waiting in-circle vehicle.
struct WaitWindow {
    std::array<double, 4> seconds{};

    void accumulate(const World& world, NodeId agent_intersection, const CoverageRegion& region) {
        const auto& approaches = world.network().approach.at(static_cast<std::size_t>(agent_intersection));
        for (int d = 0; d < 4; ++d)
            seconds[static_cast<std::size_t>(d)] +=
                waiting_count(world, region, approaches[static_cast<std::size_t>(d)]);
    }
    void reset() { seconds = {}; }
    double total() const { return seconds[0] + seconds[1] + seconds[2] + seconds[3]; }
};

// Snapshot of one approach lane at an agent decision point.
inline LaneWaitStats lane_wait_stats(const World& world, const CoverageRegion& region,
                                     LaneId lane, double window_seconds) {
    return LaneWaitStats{lane, waiting_count(world, region, lane), window_seconds};
}

inline std::array<LaneWaitStats, 4> agent_wait_stats(const World& world, NodeId agent_intersection,
                                                     const CoverageRegion& region,
                                                     const WaitWindow& window) {
    const auto& approaches = world.network().approach.at(static_cast<std::size_t>(agent_intersection));
    std::array<LaneWaitStats, 4> stats;
    for (int d = 0; d < 4; ++d)
        stats[static_cast<std::size_t>(d)] =
            lane_wait_stats(world, region, approaches[static_cast<std::size_t>(d)],
                            window.seconds[static_cast<std::size_t>(d)]);
    return stats;
}

}  // namespace tsc
