#ifndef SCOPT_EXPERIMENT_HPP
#define SCOPT_EXPERIMENT_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "duality.hpp"
#include "scenario.hpp"
#include "solver.hpp"

// Batch experiment runner: backhaul sweeps and Monte Carlo campaigns with
// deterministic seeding, emitting plot-ready CSV plus a JSON provenance echo.

namespace scopt {

struct ExperimentSpec {
    ScenarioConfig base;
    std::vector<double> sweep_backhaul_mbps = {20, 40, 60, 80, 100};
    int trials = 1;
    std::vector<std::string> methods = {"proposed_high"};
    std::string out_dir = "out";
    int threads = 1;
    bool record_wall_time = true;

    void validate() const {
        base.validate();
        if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
        if (sweep_backhaul_mbps.empty())
            throw std::invalid_argument("experiment: sweep list must be nonempty");
        for (std::size_t k = 1; k < sweep_backhaul_mbps.size(); ++k)
            if (!(sweep_backhaul_mbps[k] > sweep_backhaul_mbps[k - 1]))
                throw std::invalid_argument("experiment: sweep list must be strictly increasing");
        for (const auto& m : methods)
            if (m != "proposed_high" && m != "proposed_low" && m != "greedy" &&
                m != "ga" && m != "brute")
                throw std::invalid_argument("experiment: unknown method " + m);
    }
};

inline void apply_preset(ScenarioConfig& cfg, const std::string& preset) {
    if (preset == "high") {
        cfg.iters.zeta = 10;
        cfg.iters.nu = 400;
        cfg.iters.power = 2000;
    } else if (preset == "low") {
        cfg.iters.zeta = 1;
        cfg.iters.nu = 40;
        cfg.iters.power = 10;
    } else {
        throw std::invalid_argument("unknown preset: " + preset);
    }
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += "\"\"";
        else q += ch;
    }
    return q + "\"";
}

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

struct SummaryRow {
    std::string method;
    double backhaul_mbps = 0.0;
    std::uint64_t seed = 0;
    double utility = 0.0;
    bool feasible = false;
    double min_slack = 0.0;
    double wall_ms = 0.0;
};

struct TrialResult {
    SummaryRow row;
    // convergence trace of the first trial only
    std::vector<std::string> convergence_lines;
};

inline TrialResult run_one(const ExperimentSpec& spec, const std::string& method,
                           double backhaul_mbps, int trial) {
    ScenarioConfig cfg = spec.base;
    cfg.rng_seed = spec.base.rng_seed + static_cast<std::uint64_t>(trial);
    cfg.backhaul_capacity_bps.assign(cfg.num_sbs, backhaul_mbps * 1e6);
    if (method == "proposed_high") apply_preset(cfg, "high");
    if (method == "proposed_low") apply_preset(cfg, "low");

    TrialResult res;
    res.row.method = method;
    res.row.backhaul_mbps = backhaul_mbps;
    res.row.seed = cfg.rng_seed;

    const auto t0 = std::chrono::steady_clock::now();
    const ChannelTensor H = generate_instance(cfg);
    const double sigma2 = noise_power(cfg);
    const std::vector<double> Z = cfg.backhaul_mbps();

    if (method == "proposed_high" || method == "proposed_low") {
        SolveResult sr = solve_joint(H, cfg);
        res.row.utility = sr.utility;
        res.row.feasible = sr.feasible;
        RateTensor R = compute_rates(H, sr.P, sigma2, cfg.rb_bandwidth_hz);
        std::vector<double> L = backhaul_slack(sr.X, R, Z);
        res.row.min_slack = *std::min_element(L.begin(), L.end());
        if (trial == 0) {
            for (const auto& t : sr.ua_trace) {
                std::ostringstream os;
                os << method << ',' << fmt_double(backhaul_mbps) << ",ua," << t.iteration
                   << ',' << fmt_double(t.utility);
                res.convergence_lines.push_back(os.str());
            }
            for (const auto& t : sr.pc_trace) {
                std::ostringstream os;
                os << method << ',' << fmt_double(backhaul_mbps) << ",pc," << t.iter << ','
                   << fmt_double(t.utility);
                res.convergence_lines.push_back(os.str());
            }
        }
    } else {
        const PowerMatrix P = uniform_power(cfg);
        const RateTensor R = compute_rates(H, P, sigma2, cfg.rb_bandwidth_hz);
        Assignment X;
        if (method == "greedy") {
            X = greedy_max_rate(R);
        } else if (method == "ga") {
            GaParams gp;
            gp.population = 100;
            gp.crossover_frac = 0.8;
            gp.max_generations = 200;
            gp.elite = 50;
            gp.seed = cfg.rng_seed;
            X = genetic_opt(R, gp).best_X;
        } else {  // brute
            OracleResult orc = brute_force(R, Z);
            if (!orc.feasible_found)
                throw std::runtime_error("brute: no feasible assignment");
            X = orc.best_X;
        }
        const UtilityReport rep = utility(X, R, Z);
        res.row.utility = rep.utility;
        res.row.feasible = is_feasible(X, R, Z, P).ok;
        res.row.min_slack = *std::min_element(rep.slack.begin(), rep.slack.end());
    }
    res.row.wall_ms = spec.record_wall_time
        ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()
        : 0.0;
    return res;
}

}  // namespace detail

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["num_sbs"] = spec.base.num_sbs;
    j["num_users"] = spec.base.num_users;
    j["num_rbs"] = spec.base.num_rbs;
    j["rb_bandwidth_hz"] = spec.base.rb_bandwidth_hz;
    j["noise_psd_dbm_hz"] = spec.base.noise_psd_dbm_hz;
    j["tx_power_dbm"] = spec.base.tx_power_dbm;
    j["cluster_diameter_m"] = spec.base.cluster_diameter_m;
    j["rng_seed"] = spec.base.rng_seed;
    j["iters"] = {{"zeta", spec.base.iters.zeta},
                  {"nu", spec.base.iters.nu},
                  {"power", spec.base.iters.power},
                  {"outer_rounds", spec.base.iters.outer_rounds}};
    j["steps"] = {{"alpha", spec.base.steps.alpha},
                  {"gamma", spec.base.steps.gamma},
                  {"epsilon_f", spec.base.steps.epsilon_f},
                  {"epsilon_conv", spec.base.steps.epsilon_conv}};
    j["sweep_backhaul_mbps"] = spec.sweep_backhaul_mbps;
    j["trials"] = spec.trials;
    j["methods"] = spec.methods;
    j["threads"] = spec.threads;
    return j;
}

inline nlohmann::json kkt_to_json(const KktReport& rep) {
    nlohmann::json j;
    j["satisfied"] = rep.satisfied;
    j["slack_gradient"] = rep.slack_gradient;
    j["comp_slackness"] = rep.comp_slackness;
    j["stationarity"] = rep.stationarity;
    j["theorem_sum"] = rep.theorem_sum;
    j["theorem_condition"] = rep.theorem_condition;
    j["tol"] = rep.tol;
    return j;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

}  // namespace detail

/// Parses a `key = value` config file (one ScenarioConfig field per key;
/// `#` starts a comment; lists are comma-separated). Unknown keys throw.
inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_config: cannot open " + path);
    ScenarioConfig cfg;
    bool saw_tx = false, saw_bh = false;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("load_config: line " + std::to_string(lineno) +
                                     ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        try {
            if (key == "num_sbs") cfg.num_sbs = std::stoi(val);
            else if (key == "num_users") cfg.num_users = std::stoi(val);
            else if (key == "num_rbs") cfg.num_rbs = std::stoi(val);
            else if (key == "rb_bandwidth_hz") cfg.rb_bandwidth_hz = std::stod(val);
            else if (key == "noise_psd_dbm_hz") cfg.noise_psd_dbm_hz = std::stod(val);
            else if (key == "tx_power_dbm") { cfg.tx_power_dbm = detail::parse_list(val); saw_tx = true; }
            else if (key == "backhaul_capacity_bps") { cfg.backhaul_capacity_bps = detail::parse_list(val); saw_bh = true; }
            else if (key == "cluster_diameter_m") cfg.cluster_diameter_m = std::stod(val);
            else if (key == "pathloss_a_db") cfg.pathloss_a_db = std::stod(val);
            else if (key == "pathloss_b") cfg.pathloss_b = std::stod(val);
            else if (key == "rng_seed") cfg.rng_seed = std::stoull(val);
            else if (key == "iters.zeta") cfg.iters.zeta = std::stoi(val);
            else if (key == "iters.nu") cfg.iters.nu = std::stoi(val);
            else if (key == "iters.power") cfg.iters.power = std::stoi(val);
            else if (key == "iters.outer_rounds") cfg.iters.outer_rounds = std::stoi(val);
            else if (key == "steps.alpha") cfg.steps.alpha = std::stod(val);
            else if (key == "steps.gamma") cfg.steps.gamma = std::stod(val);
            else if (key == "steps.epsilon_f") cfg.steps.epsilon_f = std::stod(val);
            else if (key == "steps.epsilon_conv") cfg.steps.epsilon_conv = std::stod(val);
            else
                throw std::runtime_error("load_config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("load_config: line " + std::to_string(lineno) +
                                     ": bad value for " + key);
        }
    }
    // Per-SBS vectors: a single value is broadcast to all SBSs; unset keys
    // take the defaults at the configured size. Explicit wrong-length lists
    // are rejected by validate().
    if (!saw_tx) cfg.tx_power_dbm.assign(cfg.num_sbs, 35.0);
    else if (cfg.tx_power_dbm.size() == 1)
        cfg.tx_power_dbm.assign(cfg.num_sbs, cfg.tx_power_dbm[0]);
    if (!saw_bh) cfg.backhaul_capacity_bps.assign(cfg.num_sbs, 60e6);
    else if (cfg.backhaul_capacity_bps.size() == 1)
        cfg.backhaul_capacity_bps.assign(cfg.num_sbs, cfg.backhaul_capacity_bps[0]);
    cfg.validate();
    return cfg;
}

/// Runs every (method, backhaul, trial) combination, writes summary.csv,
/// convergence.csv and spec.json into the output directory.
inline void run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);

    struct Job {
        std::string method;
        double backhaul;
        int trial;
    };
    std::vector<Job> jobs;
    for (const auto& m : spec.methods)
        for (double z : spec.sweep_backhaul_mbps)
            for (int t = 0; t < spec.trials; ++t) jobs.push_back({m, z, t});

    std::vector<detail::TrialResult> results(jobs.size());
    const int workers = std::max(1, spec.threads);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs.size()) return;
            results[k] = detail::run_one(spec, jobs[k].method, jobs[k].backhaul, jobs[k].trial);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
        if (a.row.method != b.row.method) return a.row.method < b.row.method;
        if (a.row.backhaul_mbps != b.row.backhaul_mbps)
            return a.row.backhaul_mbps < b.row.backhaul_mbps;
        return a.row.seed < b.row.seed;
    });

    {
        std::ofstream f(fs::path(spec.out_dir) / "summary.csv");
        if (!f) throw std::runtime_error("run_experiment: cannot write summary.csv");
        f << "method,backhaul_mbps,seed,utility_nats,feasible,min_slack_mbps,wall_ms\n";
        for (const auto& r : results) {
            f << detail::csv_field(r.row.method) << ',' << detail::fmt_double(r.row.backhaul_mbps)
              << ',' << r.row.seed << ',' << detail::fmt_double(r.row.utility) << ','
              << (r.row.feasible ? 1 : 0) << ',' << detail::fmt_double(r.row.min_slack) << ','
              << detail::fmt_double(r.row.wall_ms) << '\n';
        }
    }
    {
        std::ofstream f(fs::path(spec.out_dir) / "convergence.csv");
        if (!f) throw std::runtime_error("run_experiment: cannot write convergence.csv");
        f << "method,backhaul_mbps,phase,iteration,utility_nats\n";
        for (const auto& r : results)
            for (const auto& line : r.convergence_lines) f << line << '\n';
    }
    {
        std::ofstream f(fs::path(spec.out_dir) / "spec.json");
        if (!f) throw std::runtime_error("run_experiment: cannot write spec.json");
        f << spec_to_json(spec).dump(2) << '\n';
    }
}

}  // namespace scopt

#endif
