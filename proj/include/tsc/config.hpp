#pragma once

// Experiment configuration: a `key: value` text format with one entry per
// line, '#' comments, strict key checking, and evaluation defaults filled
// in for everything omitted.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsc/dqn.hpp"
#include "tsc/mdp.hpp"

namespace tsc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Controller { Fixed30, Fixed40, Dqn };

inline std::string controller_name(Controller c) {
    switch (c) {
        case Controller::Fixed30: return "fixed30";
        case Controller::Fixed40: return "fixed40";
        default: return "dqn";
    }
}

struct ExperimentConfig {
    int grid_rows = 6;
    int grid_cols = 6;
    double road_length_m = 150.0;
    Controller controller = Controller::Dqn;
    int num_agents = 8;
    std::vector<NodeId> agent_ids;  // defaults to the monitored intersections
    int reward_case = 1;
    int episodes = 60;
    int episode_length_s = 500;
    std::uint64_t seed = 1;
    double coverage_area_m2 = 45216.0;
    int w_sum = 50;
    ActionSpec action;
    int base_phase_s = 10;
    int fixed_background_phase_s = 30;  // non-agent intersections under dqn
    Hyperparams hp;
    bool step_log = false;

    RewardCase reward_case_spec() const { return RewardCase{reward_case, w_sum}; }
    double coverage_radius_m() const;
};

// Monitored intersections of the 6x6 evaluation scenario; the first
// num_agents of these become the default agent set.
inline const std::vector<NodeId>& default_agent_pool() {
    static const std::vector<NodeId> pool = {8, 10, 15, 17, 20, 22, 27, 29};
    return pool;
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long out = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline std::vector<NodeId> to_id_list(const std::string& key, const std::string& v) {
    std::vector<NodeId> ids;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config key '" + key + "': empty list entry");
        ids.push_back(static_cast<NodeId>(to_long(key, item)));
    }
    if (ids.empty()) throw ConfigError("config key '" + key + "': empty list");
    return ids;
}

}  // namespace detail

inline double ExperimentConfig::coverage_radius_m() const {
    return radius_from_area(coverage_area_m2);
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key: value'");
        std::string key = detail::trim(line.substr(0, colon));
        std::string value = detail::trim(line.substr(colon + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key: value'");
        if (kv.count(key)) throw ConfigError("duplicate config key '" + key + "'");
        kv[key] = value;
    }

    bool have_num_agents = false, have_agent_ids = false;
    for (const auto& [key, value] : kv) {
        if (key == "grid_rows") cfg.grid_rows = static_cast<int>(detail::to_long(key, value));
        else if (key == "grid_cols") cfg.grid_cols = static_cast<int>(detail::to_long(key, value));
        else if (key == "road_length_m") cfg.road_length_m = detail::to_double(key, value);
        else if (key == "controller") {
            if (value == "fixed30") cfg.controller = Controller::Fixed30;
            else if (value == "fixed40") cfg.controller = Controller::Fixed40;
            else if (value == "dqn") cfg.controller = Controller::Dqn;
            else throw ConfigError("controller must be fixed30, fixed40 or dqn, got '" + value + "'");
        }
        else if (key == "num_agents") { cfg.num_agents = static_cast<int>(detail::to_long(key, value)); have_num_agents = true; }
        else if (key == "agent_ids") { cfg.agent_ids = detail::to_id_list(key, value); have_agent_ids = true; }
        else if (key == "reward_case") cfg.reward_case = static_cast<int>(detail::to_long(key, value));
        else if (key == "episodes") cfg.episodes = static_cast<int>(detail::to_long(key, value));
        else if (key == "episode_length_s") cfg.episode_length_s = static_cast<int>(detail::to_long(key, value));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::to_long(key, value));
        else if (key == "coverage_area_m2") cfg.coverage_area_m2 = detail::to_double(key, value);
        else if (key == "w_sum") cfg.w_sum = static_cast<int>(detail::to_long(key, value));
        else if (key == "action_increment_s") cfg.action.increment_s = static_cast<int>(detail::to_long(key, value));
        else if (key == "min_phase_s") cfg.action.min_phase_s = static_cast<int>(detail::to_long(key, value));
        else if (key == "max_phase_s") cfg.action.max_phase_s = static_cast<int>(detail::to_long(key, value));
        else if (key == "base_phase_s") cfg.base_phase_s = static_cast<int>(detail::to_long(key, value));
        else if (key == "fixed_background_phase_s") cfg.fixed_background_phase_s = static_cast<int>(detail::to_long(key, value));
        else if (key == "learning_rate") cfg.hp.learning_rate = detail::to_double(key, value);
        else if (key == "gamma") cfg.hp.gamma = detail::to_double(key, value);
        else if (key == "epsilon_initial") cfg.hp.epsilon_initial = detail::to_double(key, value);
        else if (key == "epsilon_final") cfg.hp.epsilon_final = detail::to_double(key, value);
        else if (key == "epsilon_decay") cfg.hp.epsilon_decay = detail::to_double(key, value);
        else if (key == "minibatch") cfg.hp.minibatch = static_cast<int>(detail::to_long(key, value));
        else if (key == "memory") cfg.hp.memory = static_cast<int>(detail::to_long(key, value));
        else if (key == "target_beta") cfg.hp.target_beta = detail::to_double(key, value);
        else if (key == "target_sync") {
            if (value == "soft") cfg.hp.hard_target_sync = false;
            else if (value == "hard") cfg.hp.hard_target_sync = true;
            else throw ConfigError("target_sync must be soft or hard, got '" + value + "'");
        }
        else if (key == "hard_sync_period") cfg.hp.hard_sync_period = static_cast<int>(detail::to_long(key, value));
        else if (key == "prioritized_replay") cfg.hp.prioritized_replay = detail::to_bool(key, value);
        else if (key == "train_steps_per_decision") cfg.hp.train_steps_per_decision = static_cast<int>(detail::to_long(key, value));
        else if (key == "step_log") cfg.step_log = detail::to_bool(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }

    // agent defaults: num_agents picks a prefix of the monitored pool
    if (have_agent_ids && !have_num_agents) cfg.num_agents = static_cast<int>(cfg.agent_ids.size());
    if (!have_agent_ids) {
        const auto& pool = default_agent_pool();
        if (cfg.num_agents >= 2 && cfg.num_agents <= static_cast<int>(pool.size()))
            cfg.agent_ids.assign(pool.begin(), pool.begin() + cfg.num_agents);
    }

    // validation
    if (cfg.grid_rows < 1 || cfg.grid_cols < 1) throw ConfigError("grid dimensions must be at least 1x1");
    if (!(cfg.road_length_m > 0.0)) throw ConfigError("road_length_m must be positive");
    if (cfg.num_agents != 2 && cfg.num_agents != 4 && cfg.num_agents != 8)
        throw ConfigError("num_agents must be one of {2,4,8}, got " + std::to_string(cfg.num_agents));
    if (static_cast<int>(cfg.agent_ids.size()) != cfg.num_agents)
        throw ConfigError("agent_ids must list exactly num_agents intersections");
    for (NodeId id : cfg.agent_ids)
        if (id < 0 || id >= cfg.grid_rows * cfg.grid_cols)
            throw ConfigError("agent id " + std::to_string(id) + " is off the grid");
    {
        auto sorted = cfg.agent_ids;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("agent_ids must be distinct");
    }
    if (cfg.reward_case < 1 || cfg.reward_case > 4)
        throw ConfigError("reward_case must be in {1,2,3,4}");
    if (cfg.episodes < 1) throw ConfigError("episodes must be at least 1");
    if (cfg.episode_length_s < 1) throw ConfigError("episode_length_s must be at least 1");
    if (!(cfg.coverage_area_m2 > 0.0)) throw ConfigError("coverage_area_m2 must be positive");
    if (cfg.w_sum <= 0) throw ConfigError("w_sum must be positive");
    if (cfg.base_phase_s < cfg.action.min_phase_s || cfg.base_phase_s > cfg.action.max_phase_s)
        throw ConfigError("base_phase_s must lie within [min_phase_s, max_phase_s]");
    if (cfg.fixed_background_phase_s <= 0) throw ConfigError("fixed_background_phase_s must be positive");
    try {
        cfg.action.validate();
        cfg.hp.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

}  // namespace tsc
