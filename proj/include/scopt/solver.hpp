#ifndef SCOPT_SOLVER_HPP
#define SCOPT_SOLVER_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "power_control.hpp"
#include "radio.hpp"
#include "scenario.hpp"
#include "ua_ra.hpp"

// Alternating decomposition: UA/RA with fixed power, then per-RB power
// control with fixed assignment, repeated for a small number of rounds.

namespace scopt {

struct SolveRoundRow {
    int round = 0;
    double utility = 0.0;
    double min_slack = 0.0;  // Mbit/s
    double max_nu = 0.0;
    double min_xi = 0.0;
};

struct SolveResult {
    Assignment X;
    PowerMatrix P;
    double utility = -std::numeric_limits<double>::infinity();
    bool feasible = false;
    std::vector<SolveRoundRow> trace;
    std::vector<Alg1TraceRow> ua_trace;   // first round, for convergence plots
    std::vector<PcTraceRow> pc_trace;     // first round
    std::vector<int> zeta_passes;         // first round
    double wall_ms = 0.0;
};

inline SolveResult solve_joint(const ChannelTensor& H, const ScenarioConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const double sigma2 = noise_power(cfg);
    const std::vector<double> Z = cfg.backhaul_mbps();

    SolveResult best;
    PowerMatrix P = uniform_power(cfg);
    double prev_u = -std::numeric_limits<double>::infinity();
    double best_feasible_u = -std::numeric_limits<double>::infinity();
    Assignment last_X;
    PowerMatrix last_P;
    double last_u = -std::numeric_limits<double>::infinity();

    for (int round = 0; round < cfg.iters.outer_rounds; ++round) {
        RateTensor R = compute_rates(H, P, sigma2, cfg.rb_bandwidth_hz);
        Alg1Budgets budgets{cfg.iters.zeta, cfg.iters.nu};
        Alg1Result ua = run_algorithm1(R, Z, PricingState{{}, {}, cfg.steps.alpha, {}}, budgets);

        PcParams pc_params{cfg.steps.epsilon_f, cfg.steps.gamma, cfg.iters.power};
        PcResult pc = run_pc(ua.X, H, Z, P, sigma2, cfg.rb_bandwidth_hz, pc_params);
        P = pc.P;

        RateTensor R2 = compute_rates(H, P, sigma2, cfg.rb_bandwidth_hz);
        const UtilityReport rep = utility(ua.X, R2, Z);
        const FeasibilityReport feas = is_feasible(ua.X, R2, Z, P);

        SolveRoundRow row;
        row.round = round;
        row.utility = rep.utility;
        row.min_slack = *std::min_element(rep.slack.begin(), rep.slack.end());
        row.max_nu = *std::max_element(ua.ps.nu.begin(), ua.ps.nu.end());
        row.min_xi = *std::min_element(pc.xi.begin(), pc.xi.end());
        best.trace.push_back(row);
        if (round == 0) {
            best.ua_trace = ua.trace;
            best.pc_trace = pc.trace;
            best.zeta_passes = ua.zeta_passes;
        }

        last_X = ua.X;
        last_P = P;
        last_u = rep.utility;
        if (feas.ok && rep.utility > best_feasible_u) {
            best.X = ua.X;
            best.P = P;
            best.utility = rep.utility;
            best.feasible = true;
            best_feasible_u = rep.utility;
        }

        if (std::isfinite(rep.utility) && std::isfinite(prev_u) &&
            std::abs(rep.utility - prev_u) < cfg.steps.epsilon_conv * std::abs(rep.utility))
            break;
        prev_u = rep.utility;
    }

    if (!best.feasible) {
        best.X = last_X;
        best.P = last_P;
        best.utility = last_u;
    }
    best.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0).count();
    return best;
}

}  // namespace scopt

#endif
