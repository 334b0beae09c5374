// Command-line front end: run experiments, re-plot metrics, run the
// action-chain feasibility diagnostic, and validate config files.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime abort.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tsc/harness.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path, const std::string& schedule_path,
            const std::string& out_dir, long seed_override) {
    tsc::ExperimentConfig cfg = tsc::load_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    tsc::RoadNetwork net = tsc::build_grid(cfg.grid_rows, cfg.grid_cols, cfg.road_length_m);
    tsc::FlowSchedule schedule = tsc::load_flow_schedule(schedule_path, net);

    fs::create_directories(out_dir);
    std::ofstream step_log;
    if (cfg.step_log) {
        step_log.open(out_dir + "/steps.csv", std::ios::binary);
        if (!step_log) throw tsc::ConfigError("cannot write step log in " + out_dir);
        step_log << "episode,step,agent_id,waiting_cars\n";
    }

    tsc::RunResult result = tsc::run_experiment(cfg, schedule, cfg.step_log ? &step_log : nullptr);

    tsc::write_metrics(result.per_agent, out_dir + "/metrics.csv");
    tsc::write_actions(result, out_dir + "/actions.csv");
    tsc::emit_plots(result.per_agent, out_dir);
    for (std::size_t a = 0; a < result.learners.size(); ++a)
        result.learners[a].save(out_dir + "/agent_" + std::to_string(result.agent_ids[a]) + ".qnet");

    int aborted = 0;
    for (const auto& ep : result.episodes) aborted += ep.aborted;
    std::cout << "run complete: " << result.episodes.size() << " episodes, "
              << result.agent_ids.size() << " agents, controller "
              << tsc::controller_name(cfg.controller);
    if (aborted) std::cout << ", " << aborted << " aborted episodes";
    std::cout << "\nmetrics: " << out_dir << "/metrics.csv" << std::endl;
    return aborted == 0 ? 0 : 2;
}

int cmd_plot(const std::string& out_dir) {
    auto metrics = tsc::read_metrics(out_dir + "/metrics.csv");
    tsc::emit_plots(metrics, out_dir);
    std::cout << "plots written to " << out_dir << std::endl;
    return 0;
}

int cmd_diagnose(const std::string& out_dir) {
    auto [ids, logs] = tsc::read_actions(out_dir + "/actions.csv");
    if (ids.empty()) throw tsc::ConfigError("action log has no entries");
    tsc::FeasibilityReport report = tsc::diagnose_feasibility(ids, logs);
    std::ofstream os(out_dir + "/feasibility.txt", std::ios::binary);
    if (!os) throw tsc::ConfigError("cannot write feasibility report in " + out_dir);
    tsc::write_feasibility(report, os);
    tsc::write_feasibility(report, std::cout);
    std::cout << "report written to " << out_dir << "/feasibility.txt" << std::endl;
    return 0;
}

int cmd_validate(const std::string& config_path) {
    tsc::ExperimentConfig cfg = tsc::load_config(config_path);
    std::cout << "config OK\n";
    std::cout << "  controller: " << tsc::controller_name(cfg.controller) << '\n';
    std::cout << "  grid: " << cfg.grid_rows << 'x' << cfg.grid_cols
              << ", road length " << cfg.road_length_m << " m\n";
    std::cout << "  agents (" << cfg.num_agents << "):";
    for (tsc::NodeId id : cfg.agent_ids) std::cout << ' ' << id;
    std::cout << '\n';
    std::cout << "  reward case: " << cfg.reward_case << ", W_sum " << cfg.w_sum << '\n';
    std::cout << "  episodes: " << cfg.episodes << " x " << cfg.episode_length_s << " s, seed "
              << cfg.seed << '\n';
    std::cout << "  coverage: " << cfg.coverage_area_m2 << " m^2 (radius "
              << cfg.coverage_radius_m() << " m)" << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent adaptive traffic signal control simulator"};
    app.require_subcommand(1);

    std::string config_path, schedule_path, out_dir;
    long seed_override = -1;

    auto* run = app.add_subcommand("run", "Run an experiment and write metrics, plots and checkpoints");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--schedule", schedule_path, "traffic flow schedule CSV")->required();
    run->add_option("--out-dir", out_dir, "output directory")->required();
    run->add_option("--seed", seed_override, "override the config seed");

    auto* plot = app.add_subcommand("plot", "Regenerate plots from metrics.csv in an output directory");
    plot->add_option("--out-dir", out_dir, "directory containing metrics.csv")->required();

    auto* diagnose = app.add_subcommand("diagnose", "Action-chain feasibility report from actions.csv");
    diagnose->add_option("--out-dir", out_dir, "directory containing actions.csv")->required();

    auto* validate = app.add_subcommand("validate-config", "Parse and validate a config file");
    validate->add_option("--config", config_path, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, schedule_path, out_dir, seed_override);
        if (plot->parsed()) return cmd_plot(out_dir);
        if (diagnose->parsed()) return cmd_diagnose(out_dir);
        if (validate->parsed()) return cmd_validate(config_path);
    } catch (const tsc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
