#ifndef SCOPT_BASELINES_HPP
#define SCOPT_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "duality.hpp"
#include "radio.hpp"

// Ground truth and comparison methods: exhaustive enumeration on tiny
// instances, max-rate greedy, and a genetic algorithm at fixed power.

namespace scopt {

struct OracleResult {
    Assignment best_X;
    double best_utility = -std::numeric_limits<double>::infinity();
    std::uint64_t num_enumerated = 0;
    std::uint64_t num_feasible = 0;
    bool feasible_found = false;
};

inline Assignment greedy_max_rate(const RateTensor& R) {
    return detail::greedy_assignment(R);
}

namespace detail {

/// Enumerates assignments with first digit in [d_lo, d_hi) in lexicographic
/// order, tracking the backhaul-feasible maximizer incrementally.
inline OracleResult brute_force_range(const RateTensor& R, const std::vector<double>& Z,
                                      int d_lo, int d_hi) {
    const int N = R.num_users, J = R.num_sbs, C = R.num_rbs;
    const int slots = J * C;
    OracleResult out;
    std::vector<int> digits(slots, 0);  // digits[s]: user on slot s = j*C+c
    std::vector<double> lam(N), load(J);

    auto rate_at = [&](int user, int s) { return R.at(user, s / C, s % C); };

    auto eval_full = [&]() {
        std::fill(lam.begin(), lam.end(), 0.0);
        std::fill(load.begin(), load.end(), 0.0);
        for (int s = 0; s < slots; ++s) {
            lam[digits[s]] += rate_at(digits[s], s);
            load[s / C] += rate_at(digits[s], s);
        }
    };

    // Compare by the product of throughputs (same ordering as the sum of
    // logs, but multiplication keeps the hot loop cheap); the log utility is
    // evaluated once at the end for the winner.
    double best_prod = -1.0;
    auto consider = [&]() {
        ++out.num_enumerated;
        for (int j = 0; j < J; ++j)
            if (load[j] > Z[j] * (1.0 + 1e-12)) return;
        ++out.num_feasible;
        double prod = 1.0;
        for (int i = 0; i < N; ++i) prod *= lam[i];
        if (prod > best_prod) {
            best_prod = prod;
            out.feasible_found = true;
            out.best_X = Assignment(J, C);
            out.best_X.user_of.assign(digits.begin(), digits.end());
        }
    };

    for (int first = d_lo; first < d_hi; ++first) {
        std::fill(digits.begin(), digits.end(), 0);
        digits[0] = first;
        eval_full();
        consider();
        // odometer over digits[1..slots)
        for (;;) {
            int s = slots - 1;
            while (s >= 1 && digits[s] == N - 1) {
                const double r = rate_at(digits[s], s);
                lam[N - 1] -= r;
                load[s / C] -= r;
                digits[s] = 0;
                lam[0] += rate_at(0, s);
                load[s / C] += rate_at(0, s);
                --s;
            }
            if (s < 1) break;
            const double r_old = rate_at(digits[s], s);
            lam[digits[s]] -= r_old;
            load[s / C] -= r_old;
            ++digits[s];
            const double r_new = rate_at(digits[s], s);
            lam[digits[s]] += r_new;
            load[s / C] += r_new;
            consider();
        }
    }
    if (out.feasible_found)
        out.best_utility = log_utility(user_throughputs(out.best_X, R));
    return out;
}

}  // namespace detail

/// Exhaustive search over X_f filtered by backhaul feasibility. Ties keep
/// the lexicographically smallest assignment. Refuses above `limit` states.
inline OracleResult brute_force(const RateTensor& R, const std::vector<double>& Z,
                                std::uint64_t limit = 10000000, int threads = 1) {
    const int N = R.num_users;
    const int slots = R.num_sbs * R.num_rbs;
    double states = std::pow(static_cast<double>(N), slots);
    if (states > static_cast<double>(limit))
        throw std::invalid_argument("brute_force: state space exceeds limit");

    threads = std::max(1, std::min(threads, N));
    if (threads == 1 || N == 1)
        return detail::brute_force_range(R, Z, 0, N);

    std::vector<std::future<OracleResult>> futs;
    for (int t = 0; t < threads; ++t) {
        const int lo = N * t / threads, hi = N * (t + 1) / threads;
        futs.push_back(std::async(std::launch::async, [&R, &Z, lo, hi] {
            return detail::brute_force_range(R, Z, lo, hi);
        }));
    }
    OracleResult out;
    for (auto& f : futs) {
        OracleResult part = f.get();
        out.num_enumerated += part.num_enumerated;
        out.num_feasible += part.num_feasible;
        // strict improvement keeps the lexicographically first maximizer
        if (part.feasible_found &&
            (!out.feasible_found || part.best_utility > out.best_utility)) {
            out.feasible_found = true;
            out.best_utility = part.best_utility;
            out.best_X = part.best_X;
        }
    }
    return out;
}

struct GaParams {
    int population = 100;
    double crossover_frac = 0.8;
    int max_generations = 100000;
    int elite = 50;
    std::uint64_t seed = 1;
};

struct GaResult {
    Assignment best_X;
    double best_utility = -std::numeric_limits<double>::infinity();
    std::vector<double> elite_trace;  // best fitness per generation
};

/// Genetic search over the user-per-slot chromosome at fixed power; fitness
/// is the proportional fairness, unconstrained by backhaul.
inline GaResult genetic_opt(const RateTensor& R, const GaParams& params) {
    if (params.population < 2 || params.elite < 1 || params.elite >= params.population ||
        params.crossover_frac < 0.0 || params.crossover_frac > 1.0)
        throw std::invalid_argument("genetic_opt: bad parameters");
    const int N = R.num_users, J = R.num_sbs, C = R.num_rbs;
    const int slots = J * C;
    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<int> gene(0, N - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const double mutation_rate = 1.0 / slots;

    auto fitness = [&](const std::vector<int>& chrom) {
        std::vector<double> lam(N, 0.0);
        for (int s = 0; s < slots; ++s) lam[chrom[s]] += R.at(chrom[s], s / C, s % C);
        return log_utility(lam);
    };

    std::vector<std::vector<int>> pop(params.population, std::vector<int>(slots));
    for (auto& chrom : pop)
        for (int s = 0; s < slots; ++s) chrom[s] = gene(rng);

    std::vector<double> fit(params.population);
    std::vector<int> order(params.population);
    GaResult out;

    auto rank = [&]() {
        for (int m = 0; m < params.population; ++m) fit[m] = fitness(pop[m]);
        for (int m = 0; m < params.population; ++m) order[m] = m;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fit[a] > fit[b]; });
    };
    auto tournament = [&]() {
        std::uniform_int_distribution<int> pick(0, params.population - 1);
        int a = pick(rng), b = pick(rng);
        return fit[a] >= fit[b] ? a : b;
    };

    rank();
    for (int gen = 0; gen < params.max_generations; ++gen) {
        out.elite_trace.push_back(fit[order[0]]);
        std::vector<std::vector<int>> next;
        next.reserve(params.population);
        for (int e = 0; e < params.elite; ++e) next.push_back(pop[order[e]]);
        while (static_cast<int>(next.size()) < params.population) {
            std::vector<int> child;
            if (coin(rng) < params.crossover_frac) {
                const auto& pa = pop[tournament()];
                const auto& pb = pop[tournament()];
                child.resize(slots);
                for (int s = 0; s < slots; ++s) child[s] = coin(rng) < 0.5 ? pa[s] : pb[s];
            } else {
                child = pop[tournament()];
            }
            for (int s = 0; s < slots; ++s)
                if (coin(rng) < mutation_rate) child[s] = gene(rng);
            next.push_back(std::move(child));
        }
        pop = std::move(next);
        rank();
    }
    out.elite_trace.push_back(fit[order[0]]);
    out.best_utility = fit[order[0]];
    out.best_X = Assignment(J, C);
    out.best_X.user_of.assign(pop[order[0]].begin(), pop[order[0]].end());
    return out;
}

}  // namespace scopt

#endif
