// Acceptance suite: end-to-end checks of the numerical core and the full
// evaluation protocol on the bundled 128-vehicle scenario. Prints one
// PASS/FAIL line per criterion; exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tsc/harness.hpp"

using namespace tsc;

namespace {

std::string g_scenario_dir = TSC_SCENARIO_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

ExperimentConfig config_from_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

FlowSchedule reference_schedule(const RoadNetwork& net) {
    return load_flow_schedule(g_scenario_dir + "/reference_128.csv", net);
}

// ---------------------------------------------------------------------------
// 1. analytic gradients vs central finite differences on a 4-3-4 network

Outcome criterion_gradient_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mlp net = Mlp::glorot({4, 3, 4}, 77);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
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

        const double h = 1e-5;
        std::size_t k = 0;
        auto check = [&](double analytic) {
            double orig = net.get_param(k);
            Gradients scratch;
            net.set_param(k, orig + h);
            double up = mse_loss_and_gradient(net, inputs, actions, targets, scratch);
            net.set_param(k, orig - h);
            double down = mse_loss_and_gradient(net, inputs, actions, targets, scratch);
            net.set_param(k, orig);
            double numeric = (up - down) / (2.0 * h);
            double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            worst = std::max(worst, rel);
            ++k;
        };
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            for (double g : grad.weights[l]) check(g);
            for (double g : grad.biases[l]) check(g);
        }
        // move to a fresh parameter point between trials
        AdamOptimizer adam(net, 0.01);
        adam.step(net, grad);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max relative gradient error %.3e (bound 1e-4)", worst);
    return {worst < 1e-4, buf};
}

// ---------------------------------------------------------------------------
// 2. reward definitions: bounds, monotonicity, W_sum guard, exact values

Outcome criterion_rewards() {
    std::mt19937_64 rng(7);
    auto stats_of = [](const std::array<int, 4>& c, const std::array<double, 4>& t) {
        std::array<LaneWaitStats, 4> s;
        for (int d = 0; d < 4; ++d)
            s[static_cast<std::size_t>(d)] =
                LaneWaitStats{d, c[static_cast<std::size_t>(d)], t[static_cast<std::size_t>(d)]};
        return s;
    };
    int checked = 0;
    for (int case_idx = 1; case_idx <= 4; ++case_idx) {
        RewardCase rc{case_idx, 50};
        for (int trial = 0; trial < 50; ++trial) {
            std::array<int, 4> counts;
            std::array<double, 4> times;
            long own_c = 0;
            double own_t = 0.0;
            for (int d = 0; d < 4; ++d) {
                counts[static_cast<std::size_t>(d)] = static_cast<int>(rng() % 14);
                times[static_cast<std::size_t>(d)] = static_cast<double>(rng() % 90);
                own_c += counts[static_cast<std::size_t>(d)];
                own_t += times[static_cast<std::size_t>(d)];
            }
            std::array<int, 4> oc;
            std::array<double, 4> ot;
            long other_c = 0;
            double other_t = 0.0;
            for (int d = 0; d < 4; ++d) {
                oc[static_cast<std::size_t>(d)] = static_cast<int>(rng() % 14);
                ot[static_cast<std::size_t>(d)] = static_cast<double>(rng() % 90);
                other_c += oc[static_cast<std::size_t>(d)];
                other_t += ot[static_cast<std::size_t>(d)];
            }
            auto own = stats_of(counts, times);
            auto other_stats = stats_of(oc, ot);
            std::vector<std::vector<LaneWaitStats>> others;
            others.push_back({other_stats.begin(), other_stats.end()});

            double expected;
            switch (case_idx) {
                case 1: expected = own_c < 50 ? 1.0 / (1.0 + static_cast<double>(own_c)) : 0.0; break;
                case 2: expected = 1.0 / (1.0 + own_t); break;
                case 3: expected = 1.0 / (1.0 + static_cast<double>(own_c + other_c)); break;
                default: expected = 1.0 / (1.0 + own_t + other_t); break;
            }
            double r = reward(rc, own, others);
            if (std::abs(r - expected) > 1e-15) return {false, "exact-value mismatch"};
            if (r < 0.0 || r > 1.0) return {false, "reward outside [0,1]"};

            int lane = static_cast<int>(rng() % 4);
            auto c2 = counts;
            auto t2 = times;
            auto oc2 = oc;
            auto ot2 = ot;
            c2[static_cast<std::size_t>(lane)] += 1;
            t2[static_cast<std::size_t>(lane)] += 3.0;
            oc2[static_cast<std::size_t>(lane)] += 2;
            ot2[static_cast<std::size_t>(lane)] += 5.0;
            auto own_b = stats_of(c2, t2);
            auto other_b = stats_of(oc2, ot2);
            std::vector<std::vector<LaneWaitStats>> others_b = {{other_b.begin(), other_b.end()}};
            if (reward(rc, own_b, others) > r + 1e-15) return {false, "not monotone in own stats"};
            if (reward(rc, own, others_b) > r + 1e-15) return {false, "not monotone in other stats"};
            ++checked;
        }
    }
    auto guard = stats_of({20, 15, 10, 5}, {0, 0, 0, 0});
    std::vector<std::vector<LaneWaitStats>> nobody;
    if (reward(RewardCase{1, 50}, guard, nobody) != 0.0) return {false, "W_sum guard not applied"};
    auto below = stats_of({20, 15, 10, 4}, {0, 0, 0, 0});
    if (std::abs(reward(RewardCase{1, 50}, below, nobody) - 1.0 / 50.0) > 1e-15)
        return {false, "value just below the guard wrong"};
    return {true, std::to_string(checked) + " randomized cases exact; bounds, monotonicity and guard hold"};
}

// ---------------------------------------------------------------------------
// 3. first passage / reach probability vs exhaustive path enumeration

double passage_by_paths(const TransitionMatrix& p, int i, int j, int n) {
    if (n == 1) return p.at(i, j);
    int states = p.size();
    std::size_t combos = 1;
    for (int k = 0; k < n - 1; ++k) combos *= static_cast<std::size_t>(states);
    double total = 0.0;
    std::vector<int> mid(static_cast<std::size_t>(n - 1));
    for (std::size_t c = 0; c < combos; ++c) {
        std::size_t rem = c;
        bool ok = true;
        for (int k = 0; k < n - 1; ++k) {
            mid[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::size_t>(states));
            rem /= static_cast<std::size_t>(states);
            if (mid[static_cast<std::size_t>(k)] == j) ok = false;
        }
        if (!ok) continue;
        double prob = p.at(i, mid[0]);
        for (int k = 1; k < n - 1; ++k)
            prob *= p.at(mid[static_cast<std::size_t>(k - 1)], mid[static_cast<std::size_t>(k)]);
        prob *= p.at(mid[static_cast<std::size_t>(n - 2)], j);
        total += prob;
    }
    return total;
}

Outcome criterion_first_passage() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(0.02, 1.0);
    double worst = 0.0;
    for (int states : {3, 4}) {
        for (int trial = 0; trial < 4; ++trial) {
            std::vector<std::vector<double>> rows(static_cast<std::size_t>(states),
                                                  std::vector<double>(static_cast<std::size_t>(states)));
            for (auto& row : rows) {
                double sum = 0.0;
                for (double& v : row) {
                    v = u(rng);
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
            TransitionMatrix p(std::move(rows));
            for (int i = 0; i < states; ++i)
                for (int j = 0; j < states; ++j) {
                    auto f = first_passage_profile(p, i, j, 8);
                    double q = 0.0;
                    for (int n = 1; n <= 8; ++n) {
                        double oracle = passage_by_paths(p, i, j, n);
                        worst = std::max(worst, std::abs(f[static_cast<std::size_t>(n - 1)] - oracle));
                        q += oracle;
                        worst = std::max(worst, std::abs(reach_probability(p, i, j, n) - q));
                    }
                }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |recursion - enumeration| = %.3e (bound 1e-12)", worst);
    return {worst < 1e-12, buf};
}

// ---------------------------------------------------------------------------
// 4. tabular Bellman fixed point and DQN argmax agreement on a toy MDP

Outcome criterion_tabular_fixed_point() {
    // two states, two actions, deterministic dynamics:
    // state 0: stay (r 1.0) / leave (r 0.1); state 1: stay (r 0.1) / escape (r 0.8)
    const double gamma = 0.9;
    auto next_state = [](int s, int a) { return a == 0 ? s : 1 - s; };
    auto reward_of = [](int s, int a) {
        if (s == 0) return a == 0 ? 1.0 : 0.1;
        return a == 0 ? 0.1 : 0.8;
    };

    double q[2][2] = {{0, 0}, {0, 0}};
    for (int iter = 0; iter < 2000; ++iter) {
        double nq[2][2];
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) {
                int s2 = next_state(s, a);
                nq[s][a] = reward_of(s, a) + gamma * std::max(q[s2][0], q[s2][1]);
            }
        std::copy(&nq[0][0], &nq[0][0] + 4, &q[0][0]);
    }
    double residual = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) {
            int s2 = next_state(s, a);
            residual = std::max(residual, std::abs(q[s][a] - (reward_of(s, a) +
                                                              gamma * std::max(q[s2][0], q[s2][1]))));
        }
    if (residual > 1e-10) return {false, "value iteration residual " + std::to_string(residual)};
    int opt0 = q[0][0] >= q[0][1] ? 0 : 1;
    int opt1 = q[1][0] >= q[1][1] ? 0 : 1;
    if (opt0 != 0 || opt1 != 1) return {false, "unexpected tabular optimum"};

    Hyperparams hp;
    hp.minibatch = 8;
    hp.memory = 64;
    hp.gamma = gamma;
    hp.learning_rate = 0.005;
    hp.train_steps_per_decision = 1;
    QLearner learner({4, 24, 24, 2}, hp, 9001, 1.0);
    auto encode = [](int s) {
        return s == 0 ? StateVector{{1, 0, 0, 0}} : StateVector{{0, 1, 0, 0}};
    };
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            for (int copy = 0; copy < 4; ++copy)
                learner.remember(
                    Transition{encode(s), a, reward_of(s, a), encode(next_state(s, a)), false});
    std::mt19937_64 rng(5);
    for (int step = 0; step < 6000; ++step) learner.train_step(rng);

    auto q0 = learner.net().forward(learner.encode(encode(0)));
    auto q1 = learner.net().forward(learner.encode(encode(1)));
    int a0 = q0[0] >= q0[1] ? 0 : 1;
    int a1 = q1[0] >= q1[1] ? 0 : 1;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "VI residual %.1e; DQN argmax (%d,%d) vs tabular (0,1); Q0=(%.2f,%.2f) Q1=(%.2f,%.2f)",
                  residual, a0, a1, q0[0], q0[1], q1[0], q1[1]);
    return {a0 == 0 && a1 == 1, buf};
}

// ---------------------------------------------------------------------------
// 5. fixed baselines keep more than one car waiting at every monitored node

Outcome criterion_baseline_reproduction() {
    RoadNetwork net = build_grid(6, 6, 150.0);
    FlowSchedule schedule = reference_schedule(net);
    double global_min = 1e9;
    for (const char* controller : {"fixed30", "fixed40"}) {
        ExperimentConfig cfg = config_from_text(std::string("controller: ") + controller + "\n");
        RunResult result = run_experiment(cfg, schedule);
        for (const auto& m : result.per_agent) global_min = std::min(global_min, m.mean_waiting_cars);
    }
    char buf[110];
    std::snprintf(buf, sizeof buf,
                  "min per-agent mean waiting cars over both baselines %.2f (> 1 required)", global_min);
    return {global_min > 1.0, buf};
}

// ---------------------------------------------------------------------------
// 6. 8-agent case-2 training cuts the post-episode-15 peak by >= 25 %

Outcome criterion_headline_improvement() {
    RoadNetwork net = build_grid(6, 6, 150.0);
    FlowSchedule schedule = reference_schedule(net);

    ExperimentConfig fixed = config_from_text("controller: fixed40\n");
    RunResult fixed_run = run_experiment(fixed, schedule);
    double fixed_peak = 0.0;
    for (const auto& m : fixed_run.per_agent)
        if (m.episode > 15) fixed_peak = std::max(fixed_peak, m.mean_waiting_cars);

    std::vector<double> peaks;
    for (int seed = 1; seed <= 5; ++seed) {
        ExperimentConfig cfg = config_from_text(
            "controller: dqn\nnum_agents: 8\nreward_case: 2\nseed: " + std::to_string(seed) + "\n");
        RunResult run = run_experiment(cfg, schedule);
        double peak = 0.0;
        for (const auto& m : run.per_agent)
            if (m.episode > 15) peak = std::max(peak, m.mean_waiting_cars);
        peaks.push_back(peak);
    }
    double med = median(peaks);
    double reduction = 100.0 * (1.0 - med / fixed_peak);
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "median DQN peak %.2f vs fixed-40 peak %.2f: %.1f%% reduction (>= 25%% required)",
                  med, fixed_peak, reduction);
    return {med <= 0.75 * fixed_peak, buf};
}

// ---------------------------------------------------------------------------
// 7. case ordering with 2 agents: own rewards no worse than shared rewards

Outcome criterion_case_ordering() {
    RoadNetwork net = build_grid(6, 6, 150.0);
    FlowSchedule schedule = reference_schedule(net);
    std::array<double, 5> med_by_case{};
    for (int case_idx : {1, 2, 3, 4}) {
        std::vector<double> finals;
        for (int seed = 1; seed <= 5; ++seed) {
            ExperimentConfig cfg = config_from_text(
                "controller: dqn\nnum_agents: 2\nreward_case: " + std::to_string(case_idx) +
                "\nseed: " + std::to_string(seed) + "\n");
            RunResult run = run_experiment(cfg, schedule);
            double sum = 0.0;
            int n = 0;
            for (const auto& m : run.per_agent)
                if (m.episode > 50) {
                    sum += m.mean_waiting_cars;
                    ++n;
                }
            finals.push_back(sum / n);
        }
        med_by_case[static_cast<std::size_t>(case_idx)] = median(finals);
    }
    bool ok = med_by_case[1] <= med_by_case[3] && med_by_case[2] <= med_by_case[4];
    char buf[160];
    std::snprintf(buf, sizeof buf, "medians c1=%.3f c3=%.3f (own<=shared %s), c2=%.3f c4=%.3f (%s)",
                  med_by_case[1], med_by_case[3], med_by_case[1] <= med_by_case[3] ? "ok" : "BAD",
                  med_by_case[2], med_by_case[4], med_by_case[2] <= med_by_case[4] ? "ok" : "BAD");
    return {ok, buf};
}

// ---------------------------------------------------------------------------
// 8. determinism of the metrics CSV and vehicle conservation

Outcome criterion_determinism_conservation() {
    RoadNetwork net = build_grid(6, 6, 150.0);
    FlowSchedule schedule = reference_schedule(net);
    ExperimentConfig cfg = config_from_text(
        "controller: dqn\nnum_agents: 8\nreward_case: 1\nepisodes: 8\nseed: 33\n");
    auto run_csv = [&]() {
        RunResult r = run_experiment(cfg, schedule);
        std::ostringstream os;
        write_metrics(r.per_agent, os);
        return os.str();
    };
    std::string a = run_csv();
    std::string b = run_csv();
    if (a != b) return {false, "metrics CSV differs between identical runs"};

    std::vector<TrafficLight> lights;
    for (NodeId n = 0; n < 36; ++n) lights.push_back(fixed_light(n, FixedPolicy{30}));
    World world(net, make_fleet(schedule), std::move(lights));
    for (int t = 0; t < 500; ++t) {
        world.spawn_pending();
        world.step();
        if (world.pending_count() + world.active_count() + world.exited_count() != 128)
            return {false, "conservation broken at step " + std::to_string(t)};
    }
    return {true, "byte-identical CSV across reruns; pending+active+exited = 128 at all 500 steps"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_scenario_dir = argv[1];
    struct Entry {
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> criteria = {
        {"1 gradient-oracle", criterion_gradient_oracle},
        {"2 reward-functions", criterion_rewards},
        {"3 first-passage-oracle", criterion_first_passage},
        {"4 tabular-fixed-point", criterion_tabular_fixed_point},
        {"5 baseline-reproduction", criterion_baseline_reproduction},
        {"6 headline-improvement", criterion_headline_improvement},
        {"7 case-ordering", criterion_case_ordering},
        {"8 determinism-conservation", criterion_determinism_conservation},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", c.name,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures;
}
