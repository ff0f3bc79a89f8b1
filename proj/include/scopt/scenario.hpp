#ifndef SCOPT_SCENARIO_HPP
#define SCOPT_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "radio.hpp"

// Reproducible problem instances: single-cluster geometry, pathloss
// 38 + 30*log10(d) and unit-mean exponential (Rayleigh power) fading.

namespace scopt {

struct IterationBudgets {
    int zeta = 10;       // inner sweep passes per SBS before the nu update
    int nu = 400;        // outer pricing iterations
    int power = 2000;    // power-exchange iterations
    int outer_rounds = 3;  // UA/RA <-> PC alternations
};

struct StepSizes {
    double alpha = 1e-4;       // floor for the nu subgradient step
    double gamma = 0.15;       // sum-power reduction step, W^2/nat
    double epsilon_f = 1e-9;   // marginal-spread convergence threshold, nats/W
    double epsilon_conv = 1e-6;  // relative utility change for the outer loop
};

struct ScenarioConfig {
    int num_sbs = 4;
    int num_users = 40;
    int num_rbs = 100;
    double rb_bandwidth_hz = 180e3;
    double noise_psd_dbm_hz = -174.0;
    std::vector<double> tx_power_dbm = {35.0, 35.0, 35.0, 35.0};
    std::vector<double> backhaul_capacity_bps = {60e6, 60e6, 60e6, 60e6};
    double cluster_diameter_m = 1000.0;
    double pathloss_a_db = 38.0;
    double pathloss_b = 30.0;
    std::uint64_t rng_seed = 1;
    IterationBudgets iters;
    StepSizes steps;

    void validate() const {
        if (num_sbs < 1 || num_users < 1 || num_rbs < 1)
            throw std::invalid_argument("scenario: counts must be >= 1");
        if (!(rb_bandwidth_hz > 0.0))
            throw std::invalid_argument("scenario: bandwidth must be positive");
        if (static_cast<int>(tx_power_dbm.size()) != num_sbs ||
            static_cast<int>(backhaul_capacity_bps.size()) != num_sbs)
            throw std::invalid_argument("scenario: per-SBS vectors must have num_sbs entries");
        for (double z : backhaul_capacity_bps)
            if (!(z > 0.0)) throw std::invalid_argument("scenario: capacities must be positive");
        if (!(cluster_diameter_m > 0.0))
            throw std::invalid_argument("scenario: diameter must be positive");
    }

    std::vector<double> backhaul_mbps() const {
        std::vector<double> z(backhaul_capacity_bps.size());
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = backhaul_capacity_bps[j] * kMbps;
        return z;
    }
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Per-RB noise power sigma^2 in watts.
inline double noise_power(const ScenarioConfig& cfg) {
    return dbm_to_watt(cfg.noise_psd_dbm_hz + 10.0 * std::log10(cfg.rb_bandwidth_hz));
}

/// Pathloss in dB; distances are clamped at 1 m to avoid the PL(0) singularity.
inline double pathloss_db(double d_m, double a_db = 38.0, double b = 30.0) {
    return a_db + b * std::log10(std::max(d_m, 1.0));
}

inline double pathloss_gain(double d_m, double a_db = 38.0, double b = 30.0) {
    return std::pow(10.0, -pathloss_db(d_m, a_db, b) / 10.0);
}

namespace detail {

struct Point {
    double x, y;
};

inline Point draw_in_disk(std::mt19937_64& rng, double radius) {
    std::uniform_real_distribution<double> u(-radius, radius);
    for (;;) {
        const double x = u(rng), y = u(rng);
        if (x * x + y * y <= radius * radius) return {x, y};
    }
}

inline double dist(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace detail

/// Deterministic per seed: SBS drop in a disk with minimum separation
/// diameter/10, users uniform in the same disk, i.i.d. fading per (i,j,c).
inline ChannelTensor generate_instance(const ScenarioConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.rng_seed);
    const double radius = cfg.cluster_diameter_m / 2.0;
    const double min_sep = cfg.cluster_diameter_m / 10.0;

    std::vector<detail::Point> sbs;
    sbs.reserve(cfg.num_sbs);
    for (int j = 0; j < cfg.num_sbs; ++j) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            detail::Point cand = detail::draw_in_disk(rng, radius);
            bool ok = true;
            for (const auto& prev : sbs)
                if (detail::dist(cand, prev) < min_sep) { ok = false; break; }
            if (ok) {
                sbs.push_back(cand);
                placed = true;
                break;
            }
        }
        if (!placed)
            throw std::runtime_error("generate_instance: SBS placement retry budget exceeded");
    }

    std::vector<detail::Point> users;
    users.reserve(cfg.num_users);
    for (int i = 0; i < cfg.num_users; ++i) users.push_back(detail::draw_in_disk(rng, radius));

    ChannelTensor H(cfg.num_users, cfg.num_sbs, cfg.num_rbs);
    std::exponential_distribution<double> fading(1.0);
    for (int i = 0; i < cfg.num_users; ++i) {
        for (int j = 0; j < cfg.num_sbs; ++j) {
            const double pl = pathloss_gain(detail::dist(users[i], sbs[j]),
                                            cfg.pathloss_a_db, cfg.pathloss_b);
            for (int c = 0; c < cfg.num_rbs; ++c)
                H.at(i, j, c) = pl * fading(rng);
        }
    }
    return H;
}

inline PowerMatrix uniform_power(const ScenarioConfig& cfg) {
    PowerMatrix P(cfg.num_sbs, cfg.num_rbs);
    for (int j = 0; j < cfg.num_sbs; ++j) {
        P.p_max[j] = dbm_to_watt(cfg.tx_power_dbm[j]);
        for (int c = 0; c < cfg.num_rbs; ++c) P.at(j, c) = P.p_max[j] / cfg.num_rbs;
    }
    return P;
}

}  // namespace scopt

#endif
