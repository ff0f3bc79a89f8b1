#ifndef SCOPT_DUALITY_HPP
#define SCOPT_DUALITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "radio.hpp"

// Dual function, dual allocation rule, projected subgradient solve and KKT
// diagnostics for the user-association dual problem.

namespace scopt {

struct DualState {
    std::vector<double> mu;      // 1/(Mbit/s), > 0
    std::vector<double> nu;      // 1/(Mbit/s), >= 0
    std::vector<double> lambda;  // Mbit/s, lambda_i = 1/mu_i
};

/// Per (j,c): argmax_i r[i][j][c]*(mu_i - nu_j), ties to the lowest index.
inline Assignment dual_allocation(const RateTensor& R, const DualState& ds) {
    Assignment X(R.num_sbs, R.num_rbs);
    for (int j = 0; j < R.num_sbs; ++j) {
        for (int c = 0; c < R.num_rbs; ++c) {
            int best = 0;
            double best_v = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < R.num_users; ++i) {
                const double v = R.at(i, j, c) * (ds.mu[i] - ds.nu[j]);
                if (v > best_v) { best_v = v; best = i; }
            }
            X.at(j, c) = best;
        }
    }
    return X;
}

/// g(mu,nu) = sum_i ln(1/mu_i) + sum_{j,c} max_i r*(mu_i-nu_j) + sum_j nu_j*Z_j - N.
inline double dual_function(const RateTensor& R, const DualState& ds,
                            const std::vector<double>& Z) {
    double g = 0.0;
    for (double m : ds.mu) {
        if (!(m > 0.0)) throw std::domain_error("dual_function: mu must be positive");
        g += std::log(1.0 / m);
    }
    for (int j = 0; j < R.num_sbs; ++j) {
        for (int c = 0; c < R.num_rbs; ++c) {
            double best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < R.num_users; ++i)
                best = std::max(best, R.at(i, j, c) * (ds.mu[i] - ds.nu[j]));
            g += best;
        }
    }
    for (int j = 0; j < R.num_sbs; ++j) g += ds.nu[j] * Z[j];
    return g - R.num_users;
}

struct DualSolveResult {
    DualState ds;
    Assignment X;
    std::vector<double> trace;  // g value per iteration
};

namespace detail {

/// Max-rate greedy assignment, used to seed mu.
inline Assignment greedy_assignment(const RateTensor& R) {
    Assignment X(R.num_sbs, R.num_rbs);
    for (int j = 0; j < R.num_sbs; ++j) {
        for (int c = 0; c < R.num_rbs; ++c) {
            int best = 0;
            for (int i = 1; i < R.num_users; ++i)
                if (R.at(i, j, c) > R.at(best, j, c)) best = i;
            X.at(j, c) = best;
        }
    }
    return X;
}

}  // namespace detail

/// Projected subgradient descent on g over (mu > 0, nu >= 0), diminishing
/// step step/sqrt(t), returns the best iterate by g value.
inline DualSolveResult dual_solve(const RateTensor& R, const std::vector<double>& Z,
                                  int max_iters, double step) {
    if (max_iters < 1) throw std::invalid_argument("dual_solve: iteration budget must be >= 1");
    const int N = R.num_users, J = R.num_sbs;
    constexpr double mu_floor = 1e-12;

    DualState ds;
    ds.nu.assign(J, 0.0);
    {
        Assignment X0 = detail::greedy_assignment(R);
        std::vector<double> lam = user_throughputs(X0, R);
        ds.mu.resize(N);
        for (int i = 0; i < N; ++i) ds.mu[i] = 1.0 / std::max(lam[i], mu_floor);
    }

    DualSolveResult out;
    double best_g = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= max_iters; ++t) {
        Assignment X = dual_allocation(R, ds);
        const double g = dual_function(R, ds, Z);
        out.trace.push_back(g);
        if (g < best_g) {
            best_g = g;
            out.ds = ds;
            out.X = X;
        }
        std::vector<double> lam = user_throughputs(X, R);
        std::vector<double> load = sbs_loads(X, R);
        const double st = step / std::sqrt(static_cast<double>(t));
        for (int i = 0; i < N; ++i) {
            const double sub = -1.0 / ds.mu[i] + lam[i];
            ds.mu[i] = std::max(ds.mu[i] - st * sub, mu_floor);
        }
        for (int j = 0; j < J; ++j) {
            const double sub = Z[j] - load[j];
            ds.nu[j] = std::max(ds.nu[j] - st * sub, 0.0);
        }
    }
    out.ds.lambda.resize(N);
    for (int i = 0; i < N; ++i) out.ds.lambda[i] = 1.0 / out.ds.mu[i];
    return out;
}

struct KktReport {
    bool satisfied = false;
    std::vector<double> slack_gradient;     // dg/dnu_j = Z_j - load_j
    std::vector<double> comp_slackness;     // nu_j * dg/dnu_j
    std::vector<double> stationarity;       // lambda_i(X) - 1/mu_i
    double theorem_sum = 0.0;               // sum_{j,c} max_i r / lambda_i(X)
    bool theorem_condition = false;         // N >= theorem_sum
    double tol = 1e-6;
};

/// Closed-form KKT residuals plus the scalar N-vs-sum test.
inline KktReport kkt_check(const RateTensor& R, const std::vector<double>& Z,
                           const DualState& ds, const Assignment& X,
                           double tol = 1e-6) {
    KktReport rep;
    rep.tol = tol;
    const int N = R.num_users, J = R.num_sbs;
    std::vector<double> lam = user_throughputs(X, R);
    std::vector<double> load = sbs_loads(X, R);

    rep.slack_gradient.resize(J);
    rep.comp_slackness.resize(J);
    for (int j = 0; j < J; ++j) {
        rep.slack_gradient[j] = Z[j] - load[j];
        rep.comp_slackness[j] = ds.nu[j] * rep.slack_gradient[j];
    }
    rep.stationarity.resize(N);
    for (int i = 0; i < N; ++i)
        rep.stationarity[i] = lam[i] - 1.0 / ds.mu[i];

    rep.theorem_sum = 0.0;
    for (int j = 0; j < J; ++j) {
        for (int c = 0; c < R.num_rbs; ++c) {
            double best = 0.0;
            for (int i = 0; i < N; ++i) {
                if (lam[i] <= 0.0) continue;
                best = std::max(best, R.at(i, j, c) / lam[i]);
            }
            rep.theorem_sum += best;
        }
    }
    rep.theorem_condition = static_cast<double>(N) >= rep.theorem_sum - tol * N;

    bool ok = true;
    for (int j = 0; j < J; ++j) {
        if (rep.slack_gradient[j] < -tol * std::max(1.0, std::abs(Z[j]))) ok = false;
        if (std::abs(rep.comp_slackness[j]) > tol * std::max(1.0, std::abs(Z[j]) * ds.nu[j]))
            ok = false;
    }
    for (int i = 0; i < N; ++i)
        if (std::abs(rep.stationarity[i]) > tol * std::max(1.0, lam[i])) ok = false;
    if (!rep.theorem_condition) ok = false;
    rep.satisfied = ok;
    return rep;
}

}  // namespace scopt

#endif
