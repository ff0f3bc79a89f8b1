#ifndef SCOPT_UA_RA_HPP
#define SCOPT_UA_RA_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "duality.hpp"
#include "radio.hpp"

// Cyclic coordinate descent for user association and RB allocation with
// zeta pricing and per-SBS backhaul pricing, plus the ring-solution
// verifier and the pricing gap bound.

namespace scopt {

inline constexpr double kZetaInf = std::numeric_limits<double>::infinity();

/// Pricing variables driving the allocation argmax. Throughputs are
/// maintained incrementally; zeta is derived from them on demand:
/// zeta_{ij}^{(c)} = 1 / (lambda_i with the (j,c) slot zeroed).
struct PricingState {
    std::vector<double> lambda;  // Mbit/s, per user, consistent with X
    std::vector<double> nu;      // 1/(Mbit/s), per SBS
    double alpha = 1e-4;         // base subgradient step
    std::vector<std::vector<double>> nu_history;

    static PricingState from(const Assignment& X, const RateTensor& R,
                             double alpha_ = 1e-4) {
        PricingState ps;
        ps.lambda = user_throughputs(X, R);
        ps.nu.assign(R.num_sbs, 0.0);
        ps.alpha = alpha_;
        return ps;
    }

    /// Sentinel +inf when the user would starve without this slot.
    double zeta(const Assignment& X, const RateTensor& R, int i, int j, int c) const {
        double denom = lambda[i];
        if (X.at(j, c) == i) denom -= R.at(i, j, c);
        if (denom <= 0.0) return kZetaInf;
        return 1.0 / denom;
    }
};

/// Full zeta tensor recomputed from scratch (test oracle for the
/// incrementally maintained state).
inline std::vector<double> zeta_of(const Assignment& X, const RateTensor& R) {
    const int N = R.num_users, J = R.num_sbs, C = R.num_rbs;
    std::vector<double> lam = user_throughputs(X, R);
    std::vector<double> z(static_cast<std::size_t>(N) * J * C);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < J; ++j)
            for (int c = 0; c < C; ++c) {
                double denom = lam[i];
                if (X.at(j, c) == i) denom -= R.at(i, j, c);
                z[(static_cast<std::size_t>(i) * J + j) * C + c] =
                    denom > 0.0 ? 1.0 / denom : kZetaInf;
            }
    return z;
}

/// argmax_i r[i][j][c]*(zeta_{ij}^{(c)} - nu_j); infinite zeta dominates,
/// ties go to the lowest user index.
inline int allocate_rb(int j, int c, const RateTensor& R, const PricingState& ps,
                       const Assignment& X) {
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    bool best_inf = false;
    for (int i = 0; i < R.num_users; ++i) {
        const double rate = R.at(i, j, c);
        const double z = ps.zeta(X, R, i, j, c);
        if (std::isinf(z)) {
            if (rate > 0.0 && !best_inf) { best = i; best_inf = true; }
            continue;
        }
        if (best_inf) continue;
        const double v = rate * (z - ps.nu[j]);
        if (v > best_v) { best_v = v; best = i; }
    }
    return best;
}

namespace detail {

/// Reassign one slot and patch the two affected users' throughputs.
inline bool reassign_slot(int j, int c, const RateTensor& R, PricingState& ps,
                          Assignment& X) {
    const int winner = allocate_rb(j, c, R, ps, X);
    const int prev = X.at(j, c);
    if (winner == prev) return false;
    ps.lambda[prev] -= R.at(prev, j, c);
    ps.lambda[winner] += R.at(winner, j, c);
    X.at(j, c) = winner;
    return true;
}

/// One pass over the RBs of a single SBS.
inline bool sweep_sbs(int j, Assignment& X, const RateTensor& R, PricingState& ps) {
    bool changed = false;
    for (int c = 0; c < R.num_rbs; ++c)
        changed |= reassign_slot(j, c, R, ps, X);
    return changed;
}

}  // namespace detail

/// One full row-major pass over all (j,c).
inline bool sweep(Assignment& X, const RateTensor& R, PricingState& ps) {
    bool changed = false;
    for (int j = 0; j < R.num_sbs; ++j)
        changed |= detail::sweep_sbs(j, X, R, ps);
    return changed;
}

/// Projected subgradient step for nu_j with a dynamic step that reaches the
/// nearest allocation-changing breakpoint.
inline double nu_step(int j, const Assignment& X, const RateTensor& R,
                      const std::vector<double>& Z, PricingState& ps) {
    double load = 0.0;
    for (int c = 0; c < R.num_rbs; ++c) load += R.at(X.at(j, c), j, c);
    const double subgrad = Z[j] - load;
    if (subgrad == 0.0) return ps.nu[j];

    // Breakpoints beta_{i',j,c}: nu values where the winner of slot (j,c)
    // flips from the current user to i'.
    const bool overloaded = load >= Z[j];
    double nearest = std::numeric_limits<double>::quiet_NaN();
    for (int c = 0; c < R.num_rbs; ++c) {
        const int cur = X.at(j, c);
        const double r_cur = R.at(cur, j, c);
        const double z_cur = ps.zeta(X, R, cur, j, c);
        if (std::isinf(z_cur)) continue;  // current user always wins
        for (int ip = 0; ip < R.num_users; ++ip) {
            if (ip == cur) continue;
            const double r_alt = R.at(ip, j, c);
            const double z_alt = ps.zeta(X, R, ip, j, c);
            if (std::isinf(z_alt)) continue;
            const double denom = r_alt - r_cur;
            if (std::abs(denom) < 1e-300) continue;
            const double beta = (r_alt * z_alt - r_cur * z_cur) / denom;
            if (overloaded) {
                if (beta > ps.nu[j] && (std::isnan(nearest) || beta < nearest)) nearest = beta;
            } else {
                if (beta < ps.nu[j] && (std::isnan(nearest) || beta > nearest)) nearest = beta;
            }
        }
    }

    double alpha_dyn = ps.alpha;
    if (!std::isnan(nearest))
        alpha_dyn = std::max(ps.alpha, std::abs((ps.nu[j] - nearest) / subgrad));
    ps.nu[j] = std::max(0.0, ps.nu[j] - alpha_dyn * subgrad);
    return ps.nu[j];
}

struct Alg1TraceRow {
    int iteration = 0;
    double utility = 0.0;
    std::vector<double> load;  // Mbit/s per SBS
    std::vector<double> nu;
};

struct Alg1Result {
    Assignment X;
    PricingState ps;
    bool feasible = false;
    bool converged = false;
    std::vector<Alg1TraceRow> trace;
    std::vector<int> zeta_passes;  // sweeps used per zeta phase, in visit order
};

struct Alg1Budgets {
    int max_zeta_passes = 10;
    int max_nu_iters = 400;
};

namespace detail {

/// Proportional-fairness greedy: slots are assigned sequentially to the
/// user with the largest log-utility gain; users without throughput yet
/// take their best available rate first.
inline Assignment pf_greedy_assignment(const RateTensor& R) {
    const int N = R.num_users, J = R.num_sbs, C = R.num_rbs;
    Assignment X(J, C);
    std::vector<double> lam(N, 0.0);
    for (int j = 0; j < J; ++j)
        for (int c = 0; c < C; ++c) {
            int best = 0;
            double best_score = -std::numeric_limits<double>::infinity();
            bool best_starved = false;
            for (int i = 0; i < N; ++i) {
                const double r = R.at(i, j, c);
                const bool starved = lam[i] <= 0.0;
                if (starved != best_starved) {
                    if (!starved) continue;  // starved users take precedence
                    best = i;
                    best_score = r;
                    best_starved = true;
                    continue;
                }
                const double score = starved ? r : std::log1p(r / lam[i]);
                if (score > best_score) { best_score = score; best = i; }
            }
            X.at(j, c) = best;
            lam[best] += R.at(best, j, c);
        }
    return X;
}

inline Assignment round_robin_assignment(const RateTensor& R) {
    Assignment X(R.num_sbs, R.num_rbs);
    int u = 0;
    for (auto& v : X.user_of) {
        v = u;
        u = (u + 1) % R.num_users;
    }
    return X;
}

inline Alg1Result run_algorithm1_from(const RateTensor& R, const std::vector<double>& Z,
                                      PricingState ps, const Alg1Budgets& budgets,
                                      Assignment X0) {
    const int J = R.num_sbs;

    Alg1Result out;
    out.X = std::move(X0);
    ps.lambda = user_throughputs(out.X, R);
    if (ps.nu.empty()) ps.nu.assign(J, 0.0);

    Assignment last_feasible;
    bool have_feasible = false;

    auto record = [&](int iter) {
        Alg1TraceRow row;
        row.iteration = iter;
        row.utility = log_utility(ps.lambda);
        row.load = sbs_loads(out.X, R);
        row.nu = ps.nu;
        out.trace.push_back(row);
    };

    auto loads_ok = [&](const std::vector<double>& load) {
        for (int j = 0; j < J; ++j)
            if (load[j] > Z[j] * (1.0 + 1e-12)) return false;
        return true;
    };

    for (int outer = 0; outer < budgets.max_nu_iters; ++outer) {
        std::vector<double> nu_prev = ps.nu;
        for (int j = 0; j < J; ++j) {
            int passes = 0;
            for (; passes < budgets.max_zeta_passes; ++passes)
                if (!detail::sweep_sbs(j, out.X, R, ps)) { ++passes; break; }
            out.zeta_passes.push_back(passes);
            nu_step(j, out.X, R, Z, ps);
        }
        ps.nu_history.push_back(ps.nu);
        record(outer);

        std::vector<double> load = sbs_loads(out.X, R);
        if (loads_ok(load)) {
            last_feasible = out.X;
            have_feasible = true;
        }
        bool nu_conv = true;
        for (int j = 0; j < J; ++j)
            if (std::abs(ps.nu[j] - nu_prev[j]) > 1e-6 * std::max(1.0, ps.nu[j]))
                nu_conv = false;
        if (nu_conv && loads_ok(load)) {
            // Stabilize: with nu frozen, run sweeps to a fixed point so the
            // returned X satisfies the pricing conditions exactly.
            for (int pass = 0; pass < 100; ++pass)
                if (!sweep(out.X, R, ps)) break;
            load = sbs_loads(out.X, R);
            if (loads_ok(load)) {
                out.feasible = true;
                out.converged = true;
                out.ps = ps;
                record(budgets.max_nu_iters);
                return out;
            }
        }
    }

    if (have_feasible) {
        out.X = last_feasible;
        ps.lambda = user_throughputs(out.X, R);
        out.feasible = true;
    }
    out.ps = ps;
    record(budgets.max_nu_iters);
    return out;
}

/// Escape move for the slack-price case (nu = 0): exchange the users of two
/// slots, re-sweep to a fixed point, and keep the result when it improves
/// utility without violating backhaul. Repeats until no exchange helps.
inline void exchange_polish(Alg1Result& res, const RateTensor& R,
                            const std::vector<double>& Z) {
    const int J = R.num_sbs, C = R.num_rbs;
    auto loads_ok = [&](const Assignment& X) {
        const std::vector<double> load = sbs_loads(X, R);
        for (int j = 0; j < J; ++j)
            if (load[j] > Z[j] * (1.0 + 1e-12)) return false;
        return true;
    };
    for (int round = 0; round < 50; ++round) {
        bool improved = false;
        const std::vector<double> lam = user_throughputs(res.X, R);
        const double u0 = log_utility(lam);
        for (int j1 = 0; j1 < J && !improved; ++j1)
            for (int c1 = 0; c1 < C && !improved; ++c1)
                for (int j2 = j1; j2 < J && !improved; ++j2)
                    for (int c2 = (j2 == j1 ? c1 + 1 : 0); c2 < C && !improved;
                         ++c2) {
                        const int a = res.X.at(j1, c1), b = res.X.at(j2, c2);
                        if (a == b) continue;
                        std::vector<double> l2 = lam;
                        l2[a] += R.at(a, j2, c2) - R.at(a, j1, c1);
                        l2[b] += R.at(b, j1, c1) - R.at(b, j2, c2);
                        if (!(log_utility(l2) > u0 + 1e-12)) continue;
                        Assignment cand = res.X;
                        cand.at(j1, c1) = b;
                        cand.at(j2, c2) = a;
                        PricingState cps = PricingState::from(cand, R, res.ps.alpha);
                        cps.nu = res.ps.nu;
                        for (int pass = 0; pass < 100; ++pass)
                            if (!sweep(cand, R, cps)) break;
                        if (!loads_ok(cand)) continue;
                        if (!(log_utility(cps.lambda) > u0 + 1e-12)) continue;
                        res.X = cand;
                        res.ps.lambda = cps.lambda;
                        improved = true;
                    }
        if (!improved) break;
    }
}

}  // namespace detail

/// Cyclic coordinate descent: per SBS, sweep RBs until zeta fixes, then one
/// nu update; outer loop until nu converges and all backhaul slacks are
/// nonnegative. Returns the last backhaul-feasible iterate if the budget
/// runs out, otherwise the final iterate flagged infeasible. When the
/// backhaul prices settle at zero, the descent is repeated from two more
/// starting assignments and the best fixed point is polished with pairwise
/// slot exchanges (the pricing conditions still hold at the returned X).
inline Alg1Result run_algorithm1(const RateTensor& R, const std::vector<double>& Z,
                                 const PricingState& ps, const Alg1Budgets& budgets) {
    if (budgets.max_zeta_passes < 1 || budgets.max_nu_iters < 1)
        throw std::invalid_argument("run_algorithm1: budgets must be >= 1");

    Alg1Result best = detail::run_algorithm1_from(R, Z, ps, budgets,
                                                  detail::greedy_assignment(R));
    auto nu_zero = [](const Alg1Result& r) {
        for (double v : r.ps.nu)
            if (v != 0.0) return false;
        return true;
    };
    if (!(best.converged && best.feasible && nu_zero(best))) return best;

    const Assignment starts[] = {detail::pf_greedy_assignment(R),
                                 detail::round_robin_assignment(R)};
    for (const Assignment& x0 : starts) {
        Alg1Result alt = detail::run_algorithm1_from(R, Z, ps, budgets, x0);
        if (alt.converged && alt.feasible && nu_zero(alt) &&
            log_utility(alt.ps.lambda) > log_utility(best.ps.lambda) + 1e-12)
            best = std::move(alt);
    }
    detail::exchange_polish(best, R, Z);
    return best;
}

struct RingReport {
    bool is_ring = false;
    double worst_neighbor_gap = 0.0;  // max over neighbors of U(X') - U(X)
};

/// Enumerates every single-slot reassignment and checks none improves U.
inline RingReport verify_ring_solution(const Assignment& X, const RateTensor& R) {
    RingReport rep;
    std::vector<double> lam = user_throughputs(X, R);
    const double u0 = log_utility(lam);
    double worst = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < X.num_sbs; ++j) {
        for (int c = 0; c < X.num_rbs; ++c) {
            const int cur = X.at(j, c);
            const double lam_cur_wo = lam[cur] - R.at(cur, j, c);
            for (int ip = 0; ip < R.num_users; ++ip) {
                if (ip == cur) continue;
                const double lam_ip_w = lam[ip] + R.at(ip, j, c);
                double gap;
                if (std::isinf(u0)) {
                    // compare utilities directly in the degenerate case
                    std::vector<double> l2 = lam;
                    l2[cur] = lam_cur_wo;
                    l2[ip] = lam_ip_w;
                    gap = log_utility(l2) - u0;
                    if (std::isnan(gap)) gap = 0.0;  // -inf vs -inf: no change
                } else if (lam_cur_wo <= 0.0) {
                    gap = -std::numeric_limits<double>::infinity();
                } else {
                    gap = std::log(lam_cur_wo) - std::log(lam[cur]) +
                          std::log(lam_ip_w) - std::log(lam[ip]);
                }
                worst = std::max(worst, gap);
            }
        }
    }
    rep.worst_neighbor_gap = worst;
    rep.is_ring = !(worst > 0.0);
    return rep;
}

/// Bound max_j epsilon_j*nu_j on the gap to 2-distance
/// neighbors; requires nonnegative slack everywhere.
inline double gap_bound(const Assignment& X, const RateTensor& R,
                        const std::vector<double>& Z, const PricingState& ps) {
    std::vector<double> load = sbs_loads(X, R);
    double bound = 0.0;
    for (int j = 0; j < X.num_sbs; ++j) {
        const double eps = Z[j] - load[j];
        if (eps < 0.0)
            throw std::invalid_argument("gap_bound: requires nonnegative backhaul slack");
        bound = std::max(bound, eps * ps.nu[j]);
    }
    return bound;
}

}  // namespace scopt

#endif
