#pragma once

// Discrete-time (1 s step) microsimulation of a grid road network.
// Vehicles are points on directed lanes; they cruise at a fixed speed,
// queue behind leaders with a minimum gap, stop at red lights, and
// transfer across intersections on green.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsc {

using NodeId = int;
using LaneId = int;

// Approach / heading order used everywhere: N, E, S, W.
enum Direction : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

inline int opposite(int dir) { return (dir + 2) & 3; }

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Node {
    bool is_intersection = false;
    int row = 0;
    int col = 0;
    int side = -1;  // boundary nodes: which side of their anchor intersection
    double x = 0.0;
    double y = 0.0;
};

struct Lane {
    NodeId from = -1;
    NodeId to = -1;
    double length_m = 0.0;
    int approach_at_to = -1;  // 0..3 when `to` is an intersection, else -1
};

struct RoadNetwork {
    int rows = 0;
    int cols = 0;
    double road_length_m = 0.0;
    std::vector<Node> nodes;  // intersections occupy ids [0, rows*cols)
    std::vector<Lane> lanes;
    std::vector<std::array<LaneId, 4>> approach;  // incoming lane per direction
    std::vector<std::array<LaneId, 4>> outgoing;  // outgoing lane per direction

    int intersection_count() const { return rows * cols; }
    bool is_intersection(NodeId n) const { return n >= 0 && n < rows * cols; }
    NodeId intersection_at(int row, int col) const { return row * cols + col; }

    // Boundary points are named by side letter + index: N/S indexed by
    // column, E/W indexed by row (e.g. "N3" is north of intersection (0,3)).
    NodeId boundary_node(const std::string& name) const;
    std::string boundary_name(NodeId n) const;
};

// Wires a rows x cols grid. Every intersection gets 4 incoming and 4
// outgoing lanes; missing neighbors become boundary entry/exit points.
RoadNetwork build_grid(int rows, int cols, double road_length_m);

enum class VehicleState { Pending, Active, Exited };

struct Vehicle {
    int id = 0;
    std::vector<LaneId> route;  // boundary entry lane first, boundary exit lane last
    int route_idx = 0;
    double lane_pos_m = 0.0;
    double speed_mps = 0.0;
    int depart_step = 0;
    double cumulative_wait_s = 0.0;
    VehicleState state = VehicleState::Pending;
    int moved_step = -1;

    LaneId current_lane() const { return route[static_cast<std::size_t>(route_idx)]; }
};

struct TrafficLight {
    NodeId intersection = -1;
    std::array<int, 4> phase_durations_s{};
    int current_phase = 0;      // phase i gives green exclusively to approach i
    int phase_elapsed_s = 0;
    long cycle_index = 0;

    bool at_cycle_boundary() const { return current_phase == 0 && phase_elapsed_s == 0; }
    bool green(int approach) const { return approach == current_phase; }
};

inline TrafficLight make_light(NodeId intersection, const std::array<int, 4>& durations) {
    for (int d : durations)
        if (d <= 0) throw SimError("traffic light phase duration must be positive");
    return TrafficLight{intersection, durations, 0, 0, 0};
}

struct SimClock {
    long step = 0;
    int episode = 0;
};

struct SimParams {
    double cruise_speed_mps = 13.9;
    double min_gap_m = 7.0;
    double wait_speed_threshold_mps = 0.1;
};

struct StepEvents {
    std::vector<int> transferred;         // vehicles that crossed an intersection
    std::vector<int> exited;              // vehicles that left the grid
    std::vector<NodeId> completed_cycles; // lights that wrapped into a new cycle
};

class World {
public:
    World(RoadNetwork network, std::vector<Vehicle> fleet,
          std::vector<TrafficLight> lights, SimParams params = {});

    // Activates every pending vehicle whose depart step has arrived and whose
    // entry is not blocked; blocked departures defer to a later step.
    std::vector<int> spawn_pending();

    // Advances the world by one second: vehicle movement, wait accrual,
    // light phase roll. Returns what happened.
    StepEvents step();

    const RoadNetwork& network() const { return net_; }
    const std::vector<Vehicle>& vehicles() const { return fleet_; }
    const std::vector<TrafficLight>& lights() const { return lights_; }
    TrafficLight& light_at(NodeId intersection);
    const TrafficLight& light_at(NodeId intersection) const;
    const SimClock& clock() const { return clock_; }
    SimParams params() const { return params_; }

    // Occupants of a lane ordered front (largest position) first.
    std::span<const int> lane_occupants(LaneId lane) const { return occupants_[static_cast<std::size_t>(lane)]; }

    int pending_count() const;
    int active_count() const;
    int exited_count() const;
    std::size_t fleet_size() const { return fleet_.size(); }

    // Point position of an active vehicle, interpolated along its lane.
    std::pair<double, double> vehicle_xy(const Vehicle& v) const;

private:
    void validate_routes() const;
    bool entry_free(LaneId lane) const;

    RoadNetwork net_;
    std::vector<Vehicle> fleet_;
    std::vector<TrafficLight> lights_;
    std::vector<int> light_of_node_;  // intersection -> index into lights_
    SimParams params_;
    SimClock clock_;
    std::vector<std::vector<int>> occupants_;
    std::vector<int> pending_order_;  // pending fleet indices, (depart, id) order
};

// ---------------------------------------------------------------------------

inline NodeId RoadNetwork::boundary_node(const std::string& name) const {
    if (name.size() < 2) throw SimError("bad boundary point name: " + name);
    int side;
    switch (name[0]) {
        case 'N': side = kNorth; break;
        case 'E': side = kEast; break;
        case 'S': side = kSouth; break;
        case 'W': side = kWest; break;
        default: throw SimError("bad boundary point name: " + name);
    }
    int index = 0;
    try {
        std::size_t used = 0;
        index = std::stoi(name.substr(1), &used);
        if (used != name.size() - 1) throw std::invalid_argument(name);
    } catch (const std::exception&) {
        throw SimError("bad boundary point name: " + name);
    }
    int row, col;
    if (side == kNorth || side == kSouth) {
        row = (side == kNorth) ? 0 : rows - 1;
        col = index;
    } else {
        row = index;
        col = (side == kWest) ? 0 : cols - 1;
    }
    if (row < 0 || row >= rows || col < 0 || col >= cols)
        throw SimError("boundary point off the grid: " + name);
    NodeId anchor = intersection_at(row, col);
    for (NodeId n = rows * cols; n < static_cast<NodeId>(nodes.size()); ++n) {
        const Node& node = nodes[static_cast<std::size_t>(n)];
        if (!node.is_intersection && node.side >= 0 &&
            node.row == anchor && node.side == side)
            return n;
    }
    throw SimError("no boundary point " + name);
}

inline std::string RoadNetwork::boundary_name(NodeId n) const {
    const Node& node = nodes.at(static_cast<std::size_t>(n));
    if (node.is_intersection) throw SimError("not a boundary node");
    NodeId anchor = node.row;  // boundary nodes store their anchor intersection in `row`
    const Node& in = nodes[static_cast<std::size_t>(anchor)];
    static const char* letters = "NESW";
    int index = (node.side == kNorth || node.side == kSouth) ? in.col : in.row;
    return std::string(1, letters[node.side]) + std::to_string(index);
}

inline RoadNetwork build_grid(int rows, int cols, double road_length_m) {
    if (rows < 1 || cols < 1) throw SimError("grid dimensions must be at least 1x1");
    if (!(road_length_m > 0.0)) throw SimError("road length must be positive");

    RoadNetwork net;
    net.rows = rows;
    net.cols = cols;
    net.road_length_m = road_length_m;
    net.nodes.resize(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            Node& n = net.nodes[static_cast<std::size_t>(net.intersection_at(r, c))];
            n.is_intersection = true;
            n.row = r;
            n.col = c;
            n.x = c * road_length_m;
            n.y = r * road_length_m;
        }

    // dx/dy per direction, y grows southward
    static constexpr int kDr[4] = {-1, 0, 1, 0};
    static constexpr int kDc[4] = {0, 1, 0, -1};

    net.approach.assign(static_cast<std::size_t>(rows) * cols, {-1, -1, -1, -1});
    net.outgoing.assign(static_cast<std::size_t>(rows) * cols, {-1, -1, -1, -1});

    auto boundary_of = [&](NodeId x, int side) -> NodeId {
        // one boundary node per (edge intersection, open side), created on demand
        const Node& in = net.nodes[static_cast<std::size_t>(x)];
        for (NodeId n = rows * cols; n < static_cast<NodeId>(net.nodes.size()); ++n) {
            const Node& b = net.nodes[static_cast<std::size_t>(n)];
            if (b.row == x && b.side == side) return n;
        }
        Node b;
        b.is_intersection = false;
        b.row = x;  // anchor intersection id
        b.col = -1;
        b.side = side;
        b.x = in.x + kDc[side] * road_length_m;
        b.y = in.y + kDr[side] * road_length_m;
        net.nodes.push_back(b);
        return static_cast<NodeId>(net.nodes.size() - 1);
    };

    // incoming lanes: for intersection X and side d, lane (neighbor_d -> X)
    for (NodeId x = 0; x < rows * cols; ++x) {
        // copy: boundary_of may grow net.nodes and invalidate references
        const int xrow = net.nodes[static_cast<std::size_t>(x)].row;
        const int xcol = net.nodes[static_cast<std::size_t>(x)].col;
        for (int d = 0; d < 4; ++d) {
            int nr = xrow + kDr[d];
            int nc = xcol + kDc[d];
            NodeId from;
            if (nr >= 0 && nr < rows && nc >= 0 && nc < cols)
                from = net.intersection_at(nr, nc);
            else
                from = boundary_of(x, d);
            net.lanes.push_back(Lane{from, x, road_length_m, d});
            net.approach[static_cast<std::size_t>(x)][static_cast<std::size_t>(d)] =
                static_cast<LaneId>(net.lanes.size() - 1);
        }
    }
    // exit lanes to boundary nodes
    for (NodeId x = 0; x < rows * cols; ++x) {
        const int xrow = net.nodes[static_cast<std::size_t>(x)].row;
        const int xcol = net.nodes[static_cast<std::size_t>(x)].col;
        for (int d = 0; d < 4; ++d) {
            int nr = xrow + kDr[d];
            int nc = xcol + kDc[d];
            if (nr >= 0 && nr < rows && nc >= 0 && nc < cols) {
                // interior: lane (X -> neighbor) is the neighbor's approach from opposite(d)
                NodeId nb = net.intersection_at(nr, nc);
                net.outgoing[static_cast<std::size_t>(x)][static_cast<std::size_t>(d)] =
                    net.approach[static_cast<std::size_t>(nb)][static_cast<std::size_t>(opposite(d))];
            } else {
                NodeId b = boundary_of(x, d);
                net.lanes.push_back(Lane{x, b, road_length_m, -1});
                net.outgoing[static_cast<std::size_t>(x)][static_cast<std::size_t>(d)] =
                    static_cast<LaneId>(net.lanes.size() - 1);
            }
        }
    }
    return net;
}

inline World::World(RoadNetwork network, std::vector<Vehicle> fleet,
                    std::vector<TrafficLight> lights, SimParams params)
    : net_(std::move(network)),
      fleet_(std::move(fleet)),
      lights_(std::move(lights)),
      params_(params) {
    light_of_node_.assign(static_cast<std::size_t>(net_.intersection_count()), -1);
    for (std::size_t i = 0; i < lights_.size(); ++i) {
        NodeId n = lights_[i].intersection;
        if (!net_.is_intersection(n)) throw SimError("light attached to a non-intersection node");
        light_of_node_[static_cast<std::size_t>(n)] = static_cast<int>(i);
    }
    for (NodeId n = 0; n < net_.intersection_count(); ++n)
        if (light_of_node_[static_cast<std::size_t>(n)] < 0)
            throw SimError("intersection without a traffic light: " + std::to_string(n));
    validate_routes();
    occupants_.assign(net_.lanes.size(), {});
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
        if (fleet_[i].state == VehicleState::Pending)
            pending_order_.push_back(static_cast<int>(i));
        else if (fleet_[i].state == VehicleState::Active)
            occupants_[static_cast<std::size_t>(fleet_[i].current_lane())].push_back(static_cast<int>(i));
    }
    for (auto& occ : occupants_)
        std::stable_sort(occ.begin(), occ.end(), [this](int a, int b) {
            return fleet_[static_cast<std::size_t>(a)].lane_pos_m > fleet_[static_cast<std::size_t>(b)].lane_pos_m;
        });
    std::stable_sort(pending_order_.begin(), pending_order_.end(), [this](int a, int b) {
        const Vehicle& va = fleet_[static_cast<std::size_t>(a)];
        const Vehicle& vb = fleet_[static_cast<std::size_t>(b)];
        if (va.depart_step != vb.depart_step) return va.depart_step < vb.depart_step;
        return va.id < vb.id;
    });
}

inline void World::validate_routes() const {
    for (const Vehicle& v : fleet_) {
        if (v.route.empty()) throw SimError("vehicle " + std::to_string(v.id) + " has an empty route");
        for (std::size_t i = 0; i < v.route.size(); ++i) {
            LaneId l = v.route[i];
            if (l < 0 || l >= static_cast<LaneId>(net_.lanes.size()))
                throw SimError("vehicle " + std::to_string(v.id) + " routed over unknown lane");
            if (i + 1 < v.route.size() &&
                net_.lanes[static_cast<std::size_t>(l)].to != net_.lanes[static_cast<std::size_t>(v.route[i + 1])].from)
                throw SimError("vehicle " + std::to_string(v.id) + " has a disconnected route");
        }
        if (net_.lanes[static_cast<std::size_t>(v.route.back())].approach_at_to != -1)
            throw SimError("vehicle " + std::to_string(v.id) + " route does not end at a boundary exit");
    }
}

inline TrafficLight& World::light_at(NodeId intersection) {
    int idx = light_of_node_.at(static_cast<std::size_t>(intersection));
    return lights_[static_cast<std::size_t>(idx)];
}

inline const TrafficLight& World::light_at(NodeId intersection) const {
    int idx = light_of_node_.at(static_cast<std::size_t>(intersection));
    return lights_[static_cast<std::size_t>(idx)];
}

inline bool World::entry_free(LaneId lane) const {
    const auto& occ = occupants_[static_cast<std::size_t>(lane)];
    if (occ.empty()) return true;
    // occupants are sorted front-first; the last one is nearest the entry
    const Vehicle& tail = fleet_[static_cast<std::size_t>(occ.back())];
    return tail.lane_pos_m >= params_.min_gap_m;
}

inline std::vector<int> World::spawn_pending() {
    std::vector<int> activated;
    std::size_t keep = 0;
    for (std::size_t i = 0; i < pending_order_.size(); ++i) {
        int vi = pending_order_[i];
        Vehicle& v = fleet_[static_cast<std::size_t>(vi)];
        if (v.depart_step > clock_.step) {
            pending_order_[keep++] = vi;
            continue;
        }
        LaneId entry = v.route.front();
        if (!entry_free(entry)) {
            pending_order_[keep++] = vi;  // deferred, retried next step
            continue;
        }
        v.state = VehicleState::Active;
        v.route_idx = 0;
        v.lane_pos_m = 0.0;
        v.speed_mps = 0.0;
        occupants_[static_cast<std::size_t>(entry)].push_back(vi);
        activated.push_back(v.id);
    }
    pending_order_.resize(keep);
    return activated;
}

inline StepEvents World::step() {
    StepEvents events;
    const int t = static_cast<int>(clock_.step);
    const double cruise = params_.cruise_speed_mps;
    const double gap = params_.min_gap_m;

    for (LaneId l = 0; l < static_cast<LaneId>(net_.lanes.size()); ++l) {
        auto snapshot = occupants_[static_cast<std::size_t>(l)];
        const Lane& lane = net_.lanes[static_cast<std::size_t>(l)];
        double lead_pos = std::numeric_limits<double>::infinity();
        bool have_lead = false;
        for (int vi : snapshot) {
            Vehicle& v = fleet_[static_cast<std::size_t>(vi)];
            if (v.route_idx >= static_cast<int>(v.route.size()) || v.current_lane() != l)
                throw SimError("vehicle " + std::to_string(v.id) + " on unknown lane");
            if (v.moved_step == t) {  // transferred in earlier this step
                lead_pos = v.lane_pos_m;
                have_lead = true;
                continue;
            }
            double target = v.lane_pos_m + cruise;
            if (have_lead) target = std::min(target, lead_pos - gap);
            target = std::max(target, v.lane_pos_m);

            if (target >= lane.length_m) {
                bool handled = false;
                if (lane.approach_at_to < 0) {
                    // boundary exit: leave the grid
                    v.state = VehicleState::Exited;
                    v.speed_mps = cruise;
                    v.moved_step = t;
                    auto& occ = occupants_[static_cast<std::size_t>(l)];
                    occ.erase(std::find(occ.begin(), occ.end(), vi));
                    events.exited.push_back(v.id);
                    handled = true;
                } else if (light_at(lane.to).green(lane.approach_at_to)) {
                    LaneId next = v.route[static_cast<std::size_t>(v.route_idx) + 1];
                    if (entry_free(next)) {
                        // crossing consumes the step; vehicle restarts at the next lane
                        v.route_idx += 1;
                        v.lane_pos_m = 0.0;
                        v.speed_mps = cruise;
                        v.moved_step = t;
                        auto& occ = occupants_[static_cast<std::size_t>(l)];
                        occ.erase(std::find(occ.begin(), occ.end(), vi));
                        occupants_[static_cast<std::size_t>(next)].push_back(vi);
                        events.transferred.push_back(v.id);
                        handled = true;
                    }
                }
                if (!handled) {
                    // red light or blocked downstream entry: hold at the stop line
                    double np = std::min(target, lane.length_m);
                    v.speed_mps = np - v.lane_pos_m;
                    v.lane_pos_m = np;
                    v.moved_step = t;
                    lead_pos = np;
                    have_lead = true;
                }
            } else {
                v.speed_mps = target - v.lane_pos_m;
                v.lane_pos_m = target;
                v.moved_step = t;
                lead_pos = target;
                have_lead = true;
            }
        }
    }

    for (Vehicle& v : fleet_)
        if (v.state == VehicleState::Active && v.speed_mps < params_.wait_speed_threshold_mps)
            v.cumulative_wait_s += 1.0;

    for (TrafficLight& tl : lights_) {
        tl.phase_elapsed_s += 1;
        if (tl.phase_elapsed_s >= tl.phase_durations_s[static_cast<std::size_t>(tl.current_phase)]) {
            tl.phase_elapsed_s = 0;
            tl.current_phase = (tl.current_phase + 1) & 3;
            if (tl.current_phase == 0) {
                tl.cycle_index += 1;
                events.completed_cycles.push_back(tl.intersection);
            }
        }
    }

    clock_.step += 1;
    return events;
}

inline int World::pending_count() const {
    int n = 0;
    for (const Vehicle& v : fleet_) n += v.state == VehicleState::Pending;
    return n;
}

inline int World::active_count() const {
    int n = 0;
    for (const Vehicle& v : fleet_) n += v.state == VehicleState::Active;
    return n;
}

inline int World::exited_count() const {
    int n = 0;
    for (const Vehicle& v : fleet_) n += v.state == VehicleState::Exited;
    return n;
}

inline std::pair<double, double> World::vehicle_xy(const Vehicle& v) const {
    const Lane& lane = net_.lanes[static_cast<std::size_t>(v.current_lane())];
    const Node& a = net_.nodes[static_cast<std::size_t>(lane.from)];
    const Node& b = net_.nodes[static_cast<std::size_t>(lane.to)];
    double f = v.lane_pos_m / lane.length_m;
    return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
}

}  // namespace tsc
