#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scopt/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Backhaul-aware proportional-fairness optimizer: batch experiment runner"};

    std::string config_path;
    std::string preset;
    std::vector<double> sweep;
    int trials = -1;
    std::vector<std::string> methods;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;

    app.add_option("--config", config_path, "Key=value scenario config file");
    app.add_option("--preset", preset, "Iteration budget preset")
        ->check(CLI::IsMember({"low", "high"}));
    app.add_option("--sweep", sweep, "Backhaul sweep points in Mbps (strictly increasing)")
        ->delimiter(',');
    app.add_option("--trials", trials, "Monte Carlo trials per sweep point");
    app.add_option("--methods", methods,
                   "Methods: proposed_high, proposed_low, greedy, ga, brute")
        ->delimiter(',');
    app.add_option("--out", out_dir, "Output directory");
    auto* seed_opt = app.add_option("--seed", seed, "Base RNG seed (trial t uses seed+t)");
    app.add_option("--threads", threads, "Worker threads");
    bool no_wall = false;
    app.add_flag("--no-wall-time", no_wall,
                 "Write 0 for wall_ms so reruns are byte-identical");

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;

    try {
        scopt::ExperimentSpec spec;
        if (!config_path.empty()) spec.base = scopt::load_config(config_path);
        if (!preset.empty()) scopt::apply_preset(spec.base, preset);
        if (!sweep.empty()) spec.sweep_backhaul_mbps = sweep;
        if (trials > 0) spec.trials = trials;
        if (!methods.empty()) spec.methods = methods;
        spec.out_dir = out_dir;
        if (seed_set) spec.base.rng_seed = seed;
        spec.threads = threads;
        spec.record_wall_time = !no_wall;

        scopt::run_experiment(spec);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
