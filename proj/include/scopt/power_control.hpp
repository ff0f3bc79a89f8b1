#ifndef SCOPT_POWER_CONTROL_HPP
#define SCOPT_POWER_CONTROL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "radio.hpp"

// Per-RB power exchange engine: closed-form marginal derivatives, RB-pair
// selection, backhaul-capped exchange step and sum-power reduction.

namespace scopt {

struct DerivativeTriple {
    double f = 0.0;    // nats/W, marginal difference between the two RBs
    double f1 = 0.0;   // nats/W^2, d f / d(delta p)
    double f2 = 0.0;   // nats/W^3, d^2 f / d(delta p)^2
};

struct PcParams {
    double epsilon_f = 1e-9;  // nats/W
    double gamma = 0.15;      // W^2/nat
    int max_iters = 2000;
};

struct PcTraceRow {
    int iter = 0;
    int sbs = 0;
    int c1 = 0;
    int c2 = 0;
    double delta_p = 0.0;   // watts; < 0 marks a sum-power reduction
    double utility = 0.0;   // nats
    double min_slack = 0.0; // Mbit/s
};

struct PcResult {
    PowerMatrix P;
    std::vector<double> xi;  // nats/W per SBS
    std::vector<PcTraceRow> trace;
    bool converged = false;
    bool budget_exhausted = false;
    bool saw_negative_xi = false;
};

namespace detail {

/// Cached per-run state: rates, throughputs and normalized channel SNRs.
struct PcContext {
    const Assignment& X;
    const ChannelTensor& H;
    double sigma2;
    double wm;  // RB bandwidth in Mbit/s per log2 unit
    RateTensor R;
    std::vector<double> lambda;

    PcContext(const Assignment& x, const ChannelTensor& h, const PowerMatrix& P,
              double s2, double bandwidth_hz)
        : X(x), H(h), sigma2(s2), wm(bandwidth_hz * kMbps) {
        R = compute_rates(H, P, sigma2, bandwidth_hz);
        lambda = user_throughputs(X, R);
    }

    double snr(int i, int j, int c) const { return H.at(i, j, c) / sigma2; }

    /// Refresh rates on one RB after its powers changed, patching lambda
    /// through the users assigned on that RB.
    void refresh_rb(const PowerMatrix& P, double bandwidth_hz, int c) {
        const int N = H.num_users, J = H.num_sbs;
        for (int k = 0; k < J; ++k) {
            const int u = X.at(k, c);
            lambda[u] -= R.at(u, k, c);
        }
        for (int i = 0; i < N; ++i) {
            double total = 0.0;
            for (int k = 0; k < J; ++k) total += H.at(i, k, c) * P.at(k, c);
            for (int j = 0; j < J; ++j) {
                const double sig = H.at(i, j, c) * P.at(j, c);
                R.at(i, j, c) = sig <= 0.0
                    ? 0.0
                    : wm * std::log2(1.0 + sig / (sigma2 + total - sig));
            }
        }
        for (int k = 0; k < J; ++k) {
            const int u = X.at(k, c);
            lambda[u] += R.at(u, k, c);
        }
    }

    /// dU/dp_j^{(c)}: serving terms over all SBSs minus the interference
    /// terms for SBSs other than j, each weighted by 1/(lambda*ln2).
    double marginal(const PowerMatrix& P, int j, int c) const {
        const int J = H.num_sbs;
        double f = 0.0;
        for (int k = 0; k < J; ++k) {
            const int u = X.at(k, c);
            if (lambda[u] <= 0.0)
                throw std::runtime_error("marginal_utility: served user has zero throughput");
            double den_s = 1.0;
            for (int b = 0; b < J; ++b) den_s += snr(u, b, c) * P.at(b, c);
            const double S = wm * snr(u, j, c) / den_s;
            f += S / (lambda[u] * std::numbers::ln2_v<double>);
            if (k != j) {
                const double den_q = den_s - snr(u, k, c) * P.at(k, c);
                const double Q = wm * snr(u, j, c) / den_q;
                f -= Q / (lambda[u] * std::numbers::ln2_v<double>);
            }
        }
        return f;
    }

    /// First and second derivatives of the marginal on RB c with respect to
    /// a perturbation of p_j^{(c)} by sign*delta, holding lambda fixed.
    void marginal_derivs(const PowerMatrix& P, int j, int c, double sign,
                         double& d1, double& d2) const {
        const int J = H.num_sbs;
        d1 = 0.0;
        d2 = 0.0;
        for (int k = 0; k < J; ++k) {
            const int u = X.at(k, c);
            const double w = 1.0 / (lambda[u] * std::numbers::ln2_v<double>);
            double den_s = 1.0;
            for (int b = 0; b < J; ++b) den_s += snr(u, b, c) * P.at(b, c);
            const double S = wm * snr(u, j, c) / den_s;
            d1 += -sign * S * S / wm * w;
            d2 += 2.0 * S * S * S / (wm * wm) * w;
            if (k != j) {
                const double den_q = den_s - snr(u, k, c) * P.at(k, c);
                const double Q = wm * snr(u, j, c) / den_q;
                d1 -= -sign * Q * Q / wm * w;
                d2 -= 2.0 * Q * Q * Q / (wm * wm) * w;
            }
        }
    }
};

}  // namespace detail

/// dU/dp_j^{(c)} in nats per watt at the current operating point.
inline double marginal_utility(int j, int c, const Assignment& X, const ChannelTensor& H,
                               const PowerMatrix& P, double sigma2, double bandwidth_hz) {
    detail::PcContext ctx(X, H, P, sigma2, bandwidth_hz);
    return ctx.marginal(P, j, c);
}

/// c1 = argmax_c marginal (zero-power RBs eligible), c2 = argmin over
/// active RBs. Ties go to the lowest RB index.
inline std::pair<int, int> select_rb_pair(int j, const Assignment& X, const ChannelTensor& H,
                                          const PowerMatrix& P, double sigma2,
                                          double bandwidth_hz) {
    detail::PcContext ctx(X, H, P, sigma2, bandwidth_hz);
    int c1 = -1, c2 = -1;
    double best_hi = -std::numeric_limits<double>::infinity();
    double best_lo = std::numeric_limits<double>::infinity();
    for (int c = 0; c < P.num_rbs; ++c) {
        const double m = ctx.marginal(P, j, c);
        if (m > best_hi) { best_hi = m; c1 = c; }
        if (P.at(j, c) > 0.0 && m < best_lo) { best_lo = m; c2 = c; }
    }
    if (c2 < 0) throw std::runtime_error("select_rb_pair: SBS has no active RB");
    return {c1, c2};
}

inline DerivativeTriple derivative_triple(int j, int c1, int c2, const Assignment& X,
                                          const ChannelTensor& H, const PowerMatrix& P,
                                          double sigma2, double bandwidth_hz) {
    detail::PcContext ctx(X, H, P, sigma2, bandwidth_hz);
    DerivativeTriple t;
    double d1a, d2a, d1b, d2b;
    t.f = ctx.marginal(P, j, c1) - ctx.marginal(P, j, c2);
    ctx.marginal_derivs(P, j, c1, +1.0, d1a, d2a);
    ctx.marginal_derivs(P, j, c2, -1.0, d1b, d2b);
    t.f1 = d1a - d1b;
    t.f2 = d2a - d2b;
    return t;
}

namespace detail {

/// Root of the second-order model f + f1*d + f2/2*d^2 chosen so d=0 when
/// f=0, with linear fallback for degenerate curvature.
inline double delta_root(const DerivativeTriple& t, double power_scale) {
    if (t.f == 0.0) return 0.0;
    const double curv_floor = 1e-12 * std::abs(t.f1) / std::max(power_scale, 1e-12);
    if (std::abs(t.f2) < curv_floor) {
        if (t.f1 == 0.0) return 0.0;
        return -t.f / t.f1;
    }
    const double disc = t.f1 * t.f1 - 2.0 * t.f2 * t.f;
    if (disc < 0.0) {
        if (t.f1 == 0.0) return 0.0;
        return -t.f / t.f1;
    }
    const double sgn = t.f1 >= 0.0 ? 1.0 : -1.0;
    return (-t.f1 + sgn * std::sqrt(disc)) / t.f2;
}

}  // namespace detail

inline double delta_p_star(int j, int c1, int c2, const Assignment& X,
                           const ChannelTensor& H, const PowerMatrix& P,
                           double sigma2, double bandwidth_hz) {
    if (c1 == c2) throw std::invalid_argument("delta_p_star: c1 == c2");
    const DerivativeTriple t = derivative_triple(j, c1, c2, X, H, P, sigma2, bandwidth_hz);
    return detail::delta_root(t, P.p_max[j]);
}

/// Backhaul cap on the exchange: donor-side terms over the other SBSs,
/// receiver-side term for SBS j itself, plus the donor power floor.
/// Negative slack clamps its term to zero.
inline double delta_p_cap(int j, int c1, int c2, const Assignment& X, const RateTensor& R,
                          const std::vector<double>& Z, const PowerMatrix& P,
                          double bandwidth_hz) {
    const double wm = bandwidth_hz * kMbps;  // Mbit/s, same units as L
    const std::vector<double> L = backhaul_slack(X, R, Z);
    double cap = P.at(j, c2);
    for (int k = 0; k < P.num_sbs; ++k) {
        if (k == j) continue;
        const double lk = std::max(L[k], 0.0);
        cap = std::min(cap, P.at(j, c2) * (1.0 - std::exp2(-lk / wm)));
    }
    const double lj = std::max(L[j], 0.0);
    cap = std::min(cap, P.at(j, c1) * (std::exp2(lj / wm) - 1.0));
    return std::max(cap, 0.0);
}

/// Zero-sum transfer of delta_p from RB c2 to RB c1 of SBS j.
inline void apply_exchange(int j, int c1, int c2, double delta_p, PowerMatrix& P) {
    if (delta_p < 0.0 || delta_p > P.at(j, c2) * (1.0 + 1e-12))
        throw std::invalid_argument("apply_exchange: delta_p out of range");
    delta_p = std::min(delta_p, P.at(j, c2));
    P.at(j, c1) += delta_p;
    P.at(j, c2) -= delta_p;
}

/// Scale down SBS j's total power by min(gamma*xi_j, P_max - sum) < 0;
/// multiplicative, so zero entries stay zero. No-op at zero sum power.
inline void adjust_total_power(int j, double xi_j, double gamma, PowerMatrix& P) {
    const double total = P.sum(j);
    if (total <= 0.0) return;
    double delta = std::min(gamma * xi_j, P.p_max[j] - total);
    if (total + delta < 0.0) delta = -total;
    const double scale = (total + delta) / total;
    for (int c = 0; c < P.num_rbs; ++c) P.at(j, c) *= scale;
}

/// Power control main loop. Repeats SBS passes until a full pass triggers no
/// exchange and no sum-power adjustment, so the final state satisfies the
/// marginal-equalization conditions for every SBS simultaneously.
inline PcResult run_pc(const Assignment& X, const ChannelTensor& H,
                       const std::vector<double>& Z, const PowerMatrix& P0,
                       double sigma2, double bandwidth_hz, const PcParams& params) {
    PcResult out;
    out.P = P0;
    out.xi.assign(P0.num_sbs, 0.0);
    const int J = P0.num_sbs, C = P0.num_rbs;

    detail::PcContext ctx(X, H, out.P, sigma2, bandwidth_hz);
    int iter = 0;

    auto record = [&](int j, int c1, int c2, double dp) {
        PcTraceRow row;
        row.iter = iter;
        row.sbs = j;
        row.c1 = c1;
        row.c2 = c2;
        row.delta_p = dp;
        row.utility = log_utility(ctx.lambda);
        const std::vector<double> L = backhaul_slack(X, ctx.R, Z);
        row.min_slack = *std::min_element(L.begin(), L.end());
        out.trace.push_back(row);
    };

    bool any_action = true;
    while (any_action) {
        any_action = false;
        for (int j = 0; j < J; ++j) {
            for (;;) {
                if (iter >= params.max_iters) {
                    out.budget_exhausted = true;
                    return out;
                }
                // receiver selection on the cached context
                int c1 = -1;
                double best_hi = -std::numeric_limits<double>::infinity();
                std::vector<double> marg(C);
                for (int c = 0; c < C; ++c) {
                    marg[c] = ctx.marginal(out.P, j, c);
                    if (marg[c] > best_hi) { best_hi = marg[c]; c1 = c; }
                }

                const double u_before = log_utility(ctx.lambda);
                // evaluate every eligible donor and keep the best utility
                // gain; taking only the argmin-marginal donor can shuttle
                // power through a tiny intermediate RB in near-useless steps
                int best_c2 = -1, drain_c2 = -1;
                double best_dp = 0.0, best_u = u_before, drain_dp = 0.0;
                for (int c2 = 0; c2 < C && c1 >= 0; ++c2) {
                    if (c2 == c1 || out.P.at(j, c2) <= 0.0) continue;
                    const double f = marg[c1] - marg[c2];
                    if (f < params.epsilon_f) continue;
                    double d1a, d2a, d1b, d2b;
                    ctx.marginal_derivs(out.P, j, c1, +1.0, d1a, d2a);
                    ctx.marginal_derivs(out.P, j, c2, -1.0, d1b, d2b);
                    const DerivativeTriple t{f, d1a - d1b, d2a - d2b};
                    double dp = detail::delta_root(t, out.P.p_max[j]);
                    double cap;
                    if (out.P.at(j, c1) > 0.0) {
                        cap = std::min(
                            delta_p_cap(j, c1, c2, X, ctx.R, Z, out.P, bandwidth_hz),
                            out.P.at(j, c2));
                    } else {
                        // the receiver-side bound degenerates to 0 at zero
                        // power, which would forbid ever reviving an empty
                        // RB; keep the donor-side bounds and let the
                        // acceptance test below enforce feasibility
                        cap = out.P.at(j, c2);
                        const std::vector<double> L = backhaul_slack(X, ctx.R, Z);
                        for (int k = 0; k < J; ++k) {
                            if (k == j) continue;
                            const double lk = std::max(L[k], 0.0);
                            cap = std::min(cap, out.P.at(j, c2) *
                                                    (1.0 - std::exp2(-lk / ctx.wm)));
                        }
                    }
                    // f > 0 is the exact directional derivative of U for this
                    // transfer, so a positive step always helps; when the
                    // second-order model offers no usable root, start from the
                    // cap instead.
                    dp = (dp > 0.0 && std::isfinite(dp)) ? std::min(dp, cap) : cap;
                    if (dp <= 0.0) continue;
                    // backtrack until the utility stops decreasing (guards
                    // both model overshoot and draining a user's last RB)
                    bool accepted = false;
                    double u_accept = 0.0;
                    for (int halvings = 0; halvings < 60; ++halvings) {
                        // a partial transfer below the resolution of either
                        // power entry is a no-op; accepting it would spin
                        // forever (a full drain of the donor always changes
                        // state: the donor becomes 0)
                        const bool full_drain = dp >= out.P.at(j, c2);
                        if (!full_drain &&
                            (out.P.at(j, c1) + dp == out.P.at(j, c1) ||
                             out.P.at(j, c2) - dp == out.P.at(j, c2)))
                            break;
                        apply_exchange(j, c1, c2, dp, out.P);
                        ctx.refresh_rb(out.P, bandwidth_hz, c1);
                        ctx.refresh_rb(out.P, bandwidth_hz, c2);
                        const double u_after = log_utility(ctx.lambda);
                        // exact monotone acceptance: a step that loses even
                        // one ulp of U can re-trigger the reverse exchange
                        // and cycle forever. The explicit slack check covers
                        // the zero-power receiver case the analytic cap
                        // cannot bound.
                        bool feasible = true;
                        {
                            const std::vector<double> L = backhaul_slack(X, ctx.R, Z);
                            for (int k = 0; k < J; ++k)
                                if (L[k] < -1e-12 * std::max(1.0, Z[k]))
                                    feasible = false;
                        }
                        if (feasible && u_after >= u_before) {
                            accepted = true;
                            u_accept = u_after;
                            break;
                        }
                        // undo and retry with half the step
                        apply_exchange(j, c2, c1, dp, out.P);
                        ctx.refresh_rb(out.P, bandwidth_hz, c1);
                        ctx.refresh_rb(out.P, bandwidth_hz, c2);
                        dp *= 0.5;
                    }
                    if (!accepted) continue;
                    // the largest non-decreasing step lands near the
                    // break-even point, past the utility peak; keep halving
                    // while the half-step does strictly better
                    for (int extra = 0; extra < 60; ++extra) {
                        const double half = dp * 0.5;
                        if (half <= 0.0 ||
                            out.P.at(j, c2) + dp - half == out.P.at(j, c2))
                            break;
                        apply_exchange(j, c2, c1, dp - half, out.P);
                        ctx.refresh_rb(out.P, bandwidth_hz, c1);
                        ctx.refresh_rb(out.P, bandwidth_hz, c2);
                        const double u_half = log_utility(ctx.lambda);
                        if (u_half > u_accept) {
                            u_accept = u_half;
                            dp = half;
                        } else {
                            apply_exchange(j, c1, c2, dp - half, out.P);
                            ctx.refresh_rb(out.P, bandwidth_hz, c1);
                            ctx.refresh_rb(out.P, bandwidth_hz, c2);
                            break;
                        }
                    }
                    if (u_accept > best_u) {
                        best_u = u_accept;
                        best_c2 = c2;
                        best_dp = dp;
                    } else if (drain_c2 < 0 && u_accept == u_before &&
                               dp >= out.P.at(j, c2) + dp) {
                        // utility-neutral full drain: removes a dust RB from
                        // the active set, so it cannot repeat forever
                        drain_c2 = c2;
                        drain_dp = dp;
                    }
                    // undo the trial application
                    apply_exchange(j, c2, c1, dp, out.P);
                    ctx.refresh_rb(out.P, bandwidth_hz, c1);
                    ctx.refresh_rb(out.P, bandwidth_hz, c2);
                }
                if (best_c2 < 0 && drain_c2 >= 0) {
                    best_c2 = drain_c2;
                    best_dp = drain_dp;
                }
                if (best_c2 >= 0) {
                    apply_exchange(j, c1, best_c2, best_dp, out.P);
                    ctx.refresh_rb(out.P, bandwidth_hz, c1);
                    ctx.refresh_rb(out.P, bandwidth_hz, best_c2);
                    // sub-resolution residue on the donor would linger as an
                    // "active" RB with a meaningless marginal; fold it into
                    // the receiver (its rate is already ~0)
                    const double residue = out.P.at(j, best_c2);
                    if (residue > 0.0 && residue < 1e-15 * out.P.p_max[j]) {
                        apply_exchange(j, c1, best_c2, residue, out.P);
                        ctx.refresh_rb(out.P, bandwidth_hz, c1);
                        ctx.refresh_rb(out.P, bandwidth_hz, best_c2);
                    }
                    ++iter;
                    record(j, c1, best_c2, best_dp);
                    any_action = true;
                    continue;
                }

                // marginal spread within epsilon (or no viable move): read xi
                // from the cheapest active RB and decide whether to shrink.
                double xi = std::numeric_limits<double>::infinity();
                for (int c = 0; c < C; ++c)
                    if (out.P.at(j, c) > 0.0) xi = std::min(xi, marg[c]);
                if (std::isinf(xi)) xi = 0.0;
                out.xi[j] = xi;
                if (xi < -params.epsilon_f && out.P.sum(j) > 1e-6 * out.P.p_max[j]) {
                    // shrinking SBS j's power lowers its interference, which
                    // can push other SBSs' loads over their backhaul; halve
                    // the step until the result stays feasible
                    std::vector<double> saved(C);
                    for (int c = 0; c < C; ++c) saved[c] = out.P.at(j, c);
                    bool shrunk = false;
                    double step_xi = xi;
                    const double u_before = log_utility(ctx.lambda);
                    for (int tries = 0; tries < 20; ++tries) {
                        adjust_total_power(j, step_xi, params.gamma, out.P);
                        for (int c = 0; c < C; ++c)
                            ctx.refresh_rb(out.P, bandwidth_hz, c);
                        const std::vector<double> L = backhaul_slack(X, ctx.R, Z);
                        bool ok = true;
                        for (int k = 0; k < J; ++k)
                            if (L[k] < -1e-12 * std::max(1.0, Z[k])) ok = false;
                        // a negative xi means less power helps, but an
                        // oversized step can overshoot (down to starving a
                        // user entirely); require U not to decrease
                        const double u_after = log_utility(ctx.lambda);
                        if (u_after < u_before) ok = false;
                        if (ok) {
                            shrunk = true;
                            break;
                        }
                        for (int c = 0; c < C; ++c) out.P.at(j, c) = saved[c];
                        for (int c = 0; c < C; ++c)
                            ctx.refresh_rb(out.P, bandwidth_hz, c);
                        step_xi *= 0.5;
                    }
                    if (shrunk) {
                        out.saw_negative_xi = true;
                        ++iter;
                        record(j, -1, -1, -1.0);
                        any_action = true;
                        continue;
                    }
                    // no backhaul-safe reduction exists; leave xi negative
                }
                break;  // SBS j converged, next SBS
            }
        }
    }
    // final xi per SBS from the converged state
    for (int j = 0; j < J; ++j) {
        double xi = std::numeric_limits<double>::infinity();
        for (int c = 0; c < C; ++c)
            if (out.P.at(j, c) > 0.0) xi = std::min(xi, ctx.marginal(out.P, j, c));
        if (std::isinf(xi)) xi = 0.0;
        out.xi[j] = xi;
    }
    out.converged = true;
    return out;
}

}  // namespace scopt

#endif
