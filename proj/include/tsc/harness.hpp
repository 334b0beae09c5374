#pragma once

// Experiment orchestration: the episode loop tying simulation, sensing,
// rewards and learning together, metric aggregation, CSV persistence,
// plots, and the action-chain feasibility diagnostic.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tsc/baselines.hpp"
#include "tsc/config.hpp"
#include "tsc/dqn.hpp"
#include "tsc/markov.hpp"
#include "tsc/mdp.hpp"
#include "tsc/plot.hpp"
#include "tsc/schedule.hpp"

namespace tsc {

struct AgentEpisodeMetrics {
    int episode = 0;  // 1-based
    NodeId agent_id = -1;
    double mean_reward = 0.0;        // over decision points
    double mean_waiting_cars = 0.0;  // over simulation steps
    double mean_loss = 0.0;          // over executed train steps
};

struct EpisodeRecord {
    int episode = 0;
    double global_mean_waiting_cars = 0.0;
    std::vector<double> loss_trace;
    bool aborted = false;
};

struct RunResult {
    std::vector<NodeId> agent_ids;
    std::vector<AgentEpisodeMetrics> per_agent;   // episode-major, config agent order
    std::vector<EpisodeRecord> episodes;
    std::vector<std::vector<int>> action_logs;    // per agent, all episodes concatenated
    std::vector<QLearner> learners;               // empty for fixed controllers
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::uint64_t agent_seed(std::uint64_t run_seed, NodeId agent, std::uint64_t stream) {
    // splitmix64 over (seed, agent, stream) keeps per-agent streams decorrelated
    std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(agent) + 1) +
                      0xbf58476d1ce4e5b9ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg, const FlowSchedule& schedule,
                                std::ostream* step_log = nullptr) {
    RoadNetwork net = build_grid(cfg.grid_rows, cfg.grid_cols, cfg.road_length_m);
    for (const FlowEntry& e : schedule.entries)
        if (e.depart_step >= cfg.episode_length_s)
            throw ConfigError("vehicle " + std::to_string(e.vehicle_id) +
                              " departs after the episode ends");

    const bool learning = cfg.controller == Controller::Dqn;
    const int n_agents = static_cast<int>(cfg.agent_ids.size());
    const double radius = cfg.coverage_radius_m();
    const RewardCase rc = cfg.reward_case_spec();

    std::vector<AgentBinding> agents;
    for (NodeId id : cfg.agent_ids)
        agents.push_back(AgentBinding{id, coverage_at(net, id, radius), WaitWindow{}});

    RunResult result;
    result.agent_ids = cfg.agent_ids;
    result.action_logs.assign(static_cast<std::size_t>(n_agents), {});

    std::vector<QLearner> learners;
    std::vector<std::mt19937_64> rngs;
    if (learning) {
        for (int a = 0; a < n_agents; ++a) {
            learners.emplace_back(std::vector<int>{4, 24, 24, 24, 4}, cfg.hp,
                                  detail::agent_seed(cfg.seed, cfg.agent_ids[static_cast<std::size_t>(a)], 0),
                                  static_cast<double>(cfg.w_sum));
            rngs.emplace_back(detail::agent_seed(cfg.seed, cfg.agent_ids[static_cast<std::size_t>(a)], 1));
        }
    }

    const int fixed_duration = cfg.controller == Controller::Fixed40 ? 40 : 30;
    long global_steps = 0;

    for (int episode = 0; episode < cfg.episodes; ++episode) {
        std::vector<TrafficLight> lights;
        for (NodeId n = 0; n < net.intersection_count(); ++n) {
            bool is_agent = std::find(cfg.agent_ids.begin(), cfg.agent_ids.end(), n) != cfg.agent_ids.end();
            if (learning && is_agent) {
                int base = cfg.base_phase_s;
                lights.push_back(make_light(n, {base, base, base, base}));
            } else {
                // fixed-period lights start phase-staggered by grid position,
                // as deployed fixed plans are; synchronized starts would let
                // platoons ride artificial green waves
                int d = learning ? cfg.fixed_background_phase_s : fixed_duration;
                TrafficLight tl = fixed_light(n, FixedPolicy{d});
                const Node& node = net.nodes[static_cast<std::size_t>(n)];
                tl.current_phase = (node.row + node.col) % 4;
                lights.push_back(tl);
            }
        }
        World world(net, make_fleet(schedule), std::move(lights));

        for (auto& agent : agents) agent.window.reset();
        std::vector<std::optional<std::pair<StateVector, int>>> pending(static_cast<std::size_t>(n_agents));
        std::vector<std::optional<Transition>> buffered(static_cast<std::size_t>(n_agents));
        std::vector<double> reward_sum(static_cast<std::size_t>(n_agents), 0.0);
        std::vector<int> reward_n(static_cast<std::size_t>(n_agents), 0);
        std::vector<double> wait_sum(static_cast<std::size_t>(n_agents), 0.0);
        std::vector<double> loss_sum(static_cast<std::size_t>(n_agents), 0.0);
        std::vector<int> loss_n(static_cast<std::size_t>(n_agents), 0);
        EpisodeRecord record;
        record.episode = episode + 1;

        try {
            for (int t = 0; t < cfg.episode_length_s; ++t) {
                world.spawn_pending();
                StepEvents ev = world.step();
                ++global_steps;
                if (world.pending_count() + world.active_count() + world.exited_count() !=
                    static_cast<int>(world.fleet_size()))
                    throw SimError("vehicle conservation violated");

                for (int a = 0; a < n_agents; ++a) {
                    AgentBinding& ag = agents[static_cast<std::size_t>(a)];
                    const auto& approaches = net.approach[static_cast<std::size_t>(ag.intersection)];
                    int total = 0;
                    for (int d = 0; d < 4; ++d) {
                        int c = waiting_count(world, ag.region, approaches[static_cast<std::size_t>(d)]);
                        ag.window.seconds[static_cast<std::size_t>(d)] += c;
                        total += c;
                    }
                    wait_sum[static_cast<std::size_t>(a)] += total;
                    if (step_log)
                        (*step_log) << episode + 1 << ',' << t << ','
                                    << cfg.agent_ids[static_cast<std::size_t>(a)] << ',' << total << '\n';
                }

                // decision barrier: agents whose cycle just completed read the
                // same snapshot, then all of them act
                std::vector<int> at_boundary;
                for (NodeId n : ev.completed_cycles)
                    for (int a = 0; a < n_agents; ++a)
                        if (cfg.agent_ids[static_cast<std::size_t>(a)] == n) at_boundary.push_back(a);

                std::vector<double> rewards(at_boundary.size());
                std::vector<StateVector> sensed(at_boundary.size());
                for (std::size_t k = 0; k < at_boundary.size(); ++k) {
                    int a = at_boundary[k];
                    rewards[k] = agent_reward(world, agents, static_cast<std::size_t>(a), rc);
                    sensed[k] = sense_state(world, agents[static_cast<std::size_t>(a)].intersection,
                                            agents[static_cast<std::size_t>(a)].region);
                }
                for (std::size_t k = 0; k < at_boundary.size(); ++k) {
                    int a = at_boundary[k];
                    auto ai = static_cast<std::size_t>(a);
                    reward_sum[ai] += rewards[k];
                    reward_n[ai] += 1;
                    if (learning) {
                        QLearner& learner = learners[ai];
                        if (pending[ai]) {
                            Transition tr{pending[ai]->first, pending[ai]->second, rewards[k],
                                          sensed[k], false};
                            if (buffered[ai]) learner.remember(*buffered[ai]);
                            buffered[ai] = tr;
                        }
                        // epsilon decays per decision made by this agent
                        long eps_step = static_cast<long>(result.action_logs[ai].size());
                        learner.set_epsilon_step(eps_step);
                        double eps = epsilon_at(eps_step, cfg.hp);
                        int action = learner.act(sensed[k], eps, rngs[ai]);
                        result.action_logs[ai].push_back(action);
                        TrafficLight& tl = world.light_at(agents[ai].intersection);
                        tl.phase_durations_s = apply_action(tl, action, cfg.action);
                        pending[ai] = std::make_pair(sensed[k], action);
                        for (int s = 0; s < cfg.hp.train_steps_per_decision; ++s) {
                            if (auto loss = learner.train_step(rngs[ai])) {
                                loss_sum[ai] += *loss;
                                loss_n[ai] += 1;
                                record.loss_trace.push_back(*loss);
                            }
                        }
                    }
                    agents[ai].window.reset();
                }
            }

            // episode truncation: the last completed transition is terminal
            if (learning)
                for (int a = 0; a < n_agents; ++a) {
                    auto ai = static_cast<std::size_t>(a);
                    if (buffered[ai]) {
                        buffered[ai]->terminal = true;
                        learners[ai].remember(*buffered[ai]);
                    }
                }
        } catch (const SimError& err) {
            record.aborted = true;
        }

        double global_wait = 0.0;
        for (int a = 0; a < n_agents; ++a) {
            auto ai = static_cast<std::size_t>(a);
            AgentEpisodeMetrics m;
            m.episode = episode + 1;
            m.agent_id = cfg.agent_ids[ai];
            m.mean_reward = reward_n[ai] > 0 ? reward_sum[ai] / reward_n[ai] : 0.0;
            m.mean_waiting_cars = wait_sum[ai] / cfg.episode_length_s;
            m.mean_loss = loss_n[ai] > 0 ? loss_sum[ai] / loss_n[ai] : 0.0;
            global_wait += m.mean_waiting_cars;
            result.per_agent.push_back(m);
        }
        record.global_mean_waiting_cars = n_agents > 0 ? global_wait / n_agents : 0.0;
        result.episodes.push_back(std::move(record));
    }

    result.learners = std::move(learners);
    return result;
}

// --- metrics CSV ------------------------------------------------------------

inline void write_metrics(const std::vector<AgentEpisodeMetrics>& metrics, std::ostream& os) {
    if (metrics.empty()) throw ConfigError("no metrics to write");
    os << "episode,agent_id,mean_reward,mean_waiting_cars,mean_loss\n";
    for (const auto& m : metrics)
        os << m.episode << ',' << m.agent_id << ',' << detail::format_double(m.mean_reward) << ','
           << detail::format_double(m.mean_waiting_cars) << ',' << detail::format_double(m.mean_loss)
           << '\n';
}

inline void write_metrics(const std::vector<AgentEpisodeMetrics>& metrics, const std::string& path) {
    std::ofstream os(path, std::ios::binary);  // binary: byte-identical across platforms
    if (!os) throw ConfigError("cannot write metrics: " + path);
    write_metrics(metrics, os);
    if (!os) throw ConfigError("metrics write failed: " + path);
}

inline std::vector<AgentEpisodeMetrics> read_metrics(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read metrics: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "episode,agent_id,mean_reward,mean_waiting_cars,mean_loss")
        throw ConfigError("bad metrics header in " + path);
    std::vector<AgentEpisodeMetrics> out;
    while (std::getline(is, line)) {
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 5) throw ConfigError("bad metrics row in " + path);
        AgentEpisodeMetrics m;
        m.episode = static_cast<int>(detail::to_long("episode", fields[0]));
        m.agent_id = static_cast<NodeId>(detail::to_long("agent_id", fields[1]));
        m.mean_reward = detail::to_double("mean_reward", fields[2]);
        m.mean_waiting_cars = detail::to_double("mean_waiting_cars", fields[3]);
        m.mean_loss = detail::to_double("mean_loss", fields[4]);
        out.push_back(m);
    }
    return out;
}

inline void emit_plots(const std::vector<AgentEpisodeMetrics>& metrics, const std::string& dir) {
    if (metrics.empty()) throw ConfigError("no metrics to plot");
    std::vector<NodeId> agent_order;
    for (const auto& m : metrics)
        if (std::find(agent_order.begin(), agent_order.end(), m.agent_id) == agent_order.end())
            agent_order.push_back(m.agent_id);
    auto series_for = [&](auto field) {
        std::vector<PlotSeries> series;
        for (NodeId id : agent_order) {
            PlotSeries s;
            s.label = "agent " + std::to_string(id);
            for (const auto& m : metrics)
                if (m.agent_id == id) s.values.push_back(field(m));
            series.push_back(std::move(s));
        }
        return series;
    };
    std::filesystem::create_directories(dir);
    write_svg_chart(dir + "/reward_vs_episode.svg", "Mean reward per episode", "mean reward",
                    series_for([](const AgentEpisodeMetrics& m) { return m.mean_reward; }));
    write_svg_chart(dir + "/waiting_cars_vs_episode.svg", "Mean waiting cars per episode",
                    "mean waiting cars",
                    series_for([](const AgentEpisodeMetrics& m) { return m.mean_waiting_cars; }));
}

// --- action logs and the feasibility diagnostic -----------------------------

inline void write_actions(const RunResult& result, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write action log: " + path);
    os << "agent_id,decision_index,action\n";
    for (std::size_t a = 0; a < result.action_logs.size(); ++a)
        for (std::size_t k = 0; k < result.action_logs[a].size(); ++k)
            os << result.agent_ids[a] << ',' << k << ',' << result.action_logs[a][k] << '\n';
}

inline std::pair<std::vector<NodeId>, std::vector<std::vector<int>>> read_actions(
    const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read action log: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "agent_id,decision_index,action")
        throw ConfigError("bad action log header in " + path);
    std::vector<NodeId> ids;
    std::vector<std::vector<int>> logs;
    while (std::getline(is, line)) {
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3) throw ConfigError("bad action log row in " + path);
        NodeId id = static_cast<NodeId>(detail::to_long("agent_id", fields[0]));
        int action = static_cast<int>(detail::to_long("action", fields[2]));
        auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) {
            ids.push_back(id);
            logs.emplace_back();
            it = ids.end() - 1;
        }
        logs[static_cast<std::size_t>(it - ids.begin())].push_back(action);
    }
    return {ids, logs};
}

struct AgentFeasibility {
    NodeId agent_id = -1;
    bool insufficient_data = false;
    std::optional<TransitionMatrix> matrix;
    std::vector<std::vector<double>> reach;    // q_ij(m)
    std::vector<TransienceReport> transience;  // per action j
};

struct FeasibilityReport {
    int reach_horizon_m = 20;
    int transience_horizon = 200;
    double transience_tolerance = 1e-6;
    std::vector<AgentFeasibility> agents;
};

inline FeasibilityReport diagnose_feasibility(const std::vector<NodeId>& agent_ids,
                                              const std::vector<std::vector<int>>& action_logs,
                                              int reach_horizon_m = 20) {
    FeasibilityReport report;
    report.reach_horizon_m = reach_horizon_m;
    for (std::size_t a = 0; a < agent_ids.size(); ++a) {
        AgentFeasibility af;
        af.agent_id = agent_ids[a];
        if (action_logs[a].size() < 2) {
            af.insufficient_data = true;
            report.agents.push_back(std::move(af));
            continue;
        }
        TransitionMatrix p = TransitionMatrix::estimate(action_logs[a], kNumActions);
        af.reach.assign(kNumActions, std::vector<double>(kNumActions, 0.0));
        for (int i = 0; i < kNumActions; ++i)
            for (int j = 0; j < kNumActions; ++j)
                af.reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    reach_probability(p, i, j, reach_horizon_m);
        for (int j = 0; j < kNumActions; ++j)
            af.transience.push_back(
                transience_check(p, j, report.transience_horizon, report.transience_tolerance));
        af.matrix = std::move(p);
        report.agents.push_back(std::move(af));
    }
    return report;
}

inline void write_feasibility(const FeasibilityReport& report, std::ostream& os) {
    for (const auto& af : report.agents) {
        os << "agent " << af.agent_id << '\n';
        if (af.insufficient_data) {
            os << "  insufficient data: need at least 2 logged actions\n";
            continue;
        }
        os << "  empirical transition matrix P(i->j):\n";
        for (int i = 0; i < kNumActions; ++i) {
            os << "   ";
            for (int j = 0; j < kNumActions; ++j) {
                char buf[32];
                std::snprintf(buf, sizeof buf, " %8.5f", af.matrix->at(i, j));
                os << buf;
            }
            os << '\n';
        }
        os << "  reach probability q_ij(m=" << report.reach_horizon_m << "):\n";
        for (int i = 0; i < kNumActions; ++i) {
            os << "   ";
            for (int j = 0; j < kNumActions; ++j) {
                char buf[32];
                std::snprintf(buf, sizeof buf, " %8.5f", af.reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
                os << buf;
            }
            os << '\n';
        }
        os << "  transience (visit sum over " << report.transience_horizon << " steps):\n";
        for (int j = 0; j < kNumActions; ++j) {
            const auto& t = af.transience[static_cast<std::size_t>(j)];
            os << "    action " << j << ": visit_sum=" << detail::format_double(t.visit_sum)
               << " converged=" << (t.converged ? "true" : "false") << '\n';
        }
    }
}

}  // namespace tsc
