#pragma once

// Traffic demand: a CSV of vehicles entering at boundary points, with
// routes resolved to shortest grid paths at load time.
//
// Schema (header required):
//   vehicle_id,origin,destination,depart_step

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tsc/config.hpp"
#include "tsc/sim.hpp"

namespace tsc {

struct FlowEntry {
    int vehicle_id = 0;
    std::string origin;
    std::string destination;
    int depart_step = 0;
};

struct FlowSchedule {
    std::vector<FlowEntry> entries;        // sorted by (depart_step, vehicle_id)
    std::vector<std::vector<LaneId>> routes;  // parallel to entries
};

namespace detail {

// Greedy shortest grid walk. The axis with the larger remaining distance
// moves first; on ties east wins over south, and both over westward or
// northward moves.
inline int route_step(int dr, int dc) {
    int vertical = dr > 0 ? kSouth : kNorth;
    int horizontal = dc > 0 ? kEast : kWest;
    if (std::abs(dr) > std::abs(dc)) return vertical;
    if (std::abs(dc) > std::abs(dr)) return horizontal;
    if (dc > 0) return kEast;
    if (dr > 0) return kSouth;
    return horizontal;
}

inline std::vector<LaneId> route_between(const RoadNetwork& net, NodeId origin, NodeId destination) {
    const Node& ob = net.nodes[static_cast<std::size_t>(origin)];
    const Node& db = net.nodes[static_cast<std::size_t>(destination)];
    NodeId entry = ob.row;   // boundary nodes anchor to their intersection
    NodeId target = db.row;
    std::vector<LaneId> route;
    route.push_back(net.approach[static_cast<std::size_t>(entry)][static_cast<std::size_t>(ob.side)]);
    NodeId current = entry;
    int guard = net.rows * net.cols + 2;
    while (current != target) {
        if (--guard < 0) return {};  // should be unreachable on a grid
        const Node& cn = net.nodes[static_cast<std::size_t>(current)];
        const Node& tn = net.nodes[static_cast<std::size_t>(target)];
        int dir = route_step(tn.row - cn.row, tn.col - cn.col);
        LaneId lane = net.outgoing[static_cast<std::size_t>(current)][static_cast<std::size_t>(dir)];
        route.push_back(lane);
        current = net.lanes[static_cast<std::size_t>(lane)].to;
    }
    route.push_back(net.outgoing[static_cast<std::size_t>(target)][static_cast<std::size_t>(db.side)]);
    return route;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    return fields;
}

}  // namespace detail

inline FlowSchedule parse_flow_schedule(std::istream& in, const RoadNetwork& net) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("flow schedule is empty; expected a CSV header");
    {
        auto header = detail::split_csv_line(line);
        const std::vector<std::string> expected = {"vehicle_id", "origin", "destination", "depart_step"};
        if (std::vector<std::string>(header.begin(), header.end()) != expected)
            throw ConfigError("flow schedule header must be vehicle_id,origin,destination,depart_step");
    }
    FlowSchedule schedule;
    std::set<int> seen_ids;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 4)
            throw ConfigError("flow schedule line " + std::to_string(line_no) + ": expected 4 fields");
        FlowEntry e;
        e.vehicle_id = static_cast<int>(detail::to_long("vehicle_id", fields[0]));
        e.origin = fields[1];
        e.destination = fields[2];
        e.depart_step = static_cast<int>(detail::to_long("depart_step", fields[3]));
        if (!seen_ids.insert(e.vehicle_id).second)
            throw ConfigError("duplicate vehicle id " + std::to_string(e.vehicle_id));
        if (e.depart_step < 0)
            throw ConfigError("vehicle " + std::to_string(e.vehicle_id) + " has a negative depart step");
        if (e.origin == e.destination)
            throw ConfigError("vehicle " + std::to_string(e.vehicle_id) + ": origin equals destination");
        schedule.entries.push_back(std::move(e));
    }
    std::stable_sort(schedule.entries.begin(), schedule.entries.end(),
                     [](const FlowEntry& a, const FlowEntry& b) {
                         if (a.depart_step != b.depart_step) return a.depart_step < b.depart_step;
                         return a.vehicle_id < b.vehicle_id;
                     });
    for (const FlowEntry& e : schedule.entries) {
        NodeId o, d;
        try {
            o = net.boundary_node(e.origin);
            d = net.boundary_node(e.destination);
        } catch (const SimError& err) {
            throw ConfigError("vehicle " + std::to_string(e.vehicle_id) + ": " + err.what());
        }
        auto route = detail::route_between(net, o, d);
        if (route.empty())
            throw ConfigError("vehicle " + std::to_string(e.vehicle_id) + ": destination unreachable");
        schedule.routes.push_back(std::move(route));
    }
    return schedule;
}

inline FlowSchedule load_flow_schedule(const std::string& path, const RoadNetwork& net) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open flow schedule: " + path);
    return parse_flow_schedule(in, net);
}

// Fresh pending fleet for one episode.
inline std::vector<Vehicle> make_fleet(const FlowSchedule& schedule) {
    std::vector<Vehicle> fleet;
    fleet.reserve(schedule.entries.size());
    for (std::size_t i = 0; i < schedule.entries.size(); ++i) {
        Vehicle v;
        v.id = schedule.entries[i].vehicle_id;
        v.route = schedule.routes[i];
        v.depart_step = schedule.entries[i].depart_step;
        fleet.push_back(std::move(v));
    }
    return fleet;
}

}  // namespace tsc
