#ifndef SCOPT_RADIO_HPP
#define SCOPT_RADIO_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Rates, SINR, proportional fairness, backhaul loads and feasibility
// predicates. All rates are kept in Mbit/s internally so that the pricing
// variables stay near O(1).

namespace scopt {

inline constexpr double kMbps = 1e-6;  // bit/s -> Mbit/s

/// Per-(user, SBS, RB) linear power gains |h|^2.
struct ChannelTensor {
    int num_users = 0;
    int num_sbs = 0;
    int num_rbs = 0;
    std::vector<double> g;  // [i][j][c] row-major

    ChannelTensor() = default;
    ChannelTensor(int n, int j, int c)
        : num_users(n), num_sbs(j), num_rbs(c),
          g(static_cast<std::size_t>(n) * j * c, 0.0) {}

    double& at(int i, int j, int c) {
        return g[(static_cast<std::size_t>(i) * num_sbs + j) * num_rbs + c];
    }
    double at(int i, int j, int c) const {
        return g[(static_cast<std::size_t>(i) * num_sbs + j) * num_rbs + c];
    }
};

/// Per-(SBS, RB) transmit powers with per-SBS sum caps.
struct PowerMatrix {
    int num_sbs = 0;
    int num_rbs = 0;
    std::vector<double> p;      // [j][c], watts
    std::vector<double> p_max;  // [j], watts

    PowerMatrix() = default;
    PowerMatrix(int j, int c)
        : num_sbs(j), num_rbs(c),
          p(static_cast<std::size_t>(j) * c, 0.0), p_max(j, 0.0) {}

    static PowerMatrix uniform(int j, int c, double per_sbs_max) {
        PowerMatrix pm(j, c);
        for (int k = 0; k < j; ++k) pm.p_max[k] = per_sbs_max;
        for (auto& v : pm.p) v = per_sbs_max / c;
        return pm;
    }

    double& at(int j, int c) { return p[static_cast<std::size_t>(j) * num_rbs + c]; }
    double at(int j, int c) const { return p[static_cast<std::size_t>(j) * num_rbs + c]; }

    double sum(int j) const {
        double s = 0.0;
        for (int c = 0; c < num_rbs; ++c) s += at(j, c);
        return s;
    }

    /// Non-negativity plus per-SBS sum caps (relative slack 1e-12).
    bool valid() const {
        for (double v : p)
            if (!(v >= 0.0) || !std::isfinite(v)) return false;
        for (int j = 0; j < num_sbs; ++j)
            if (sum(j) > p_max[j] * (1.0 + 1e-12)) return false;
        return true;
    }
};

/// UA/RA indicator X: exactly one user per (SBS, RB) by construction.
struct Assignment {
    int num_sbs = 0;
    int num_rbs = 0;
    std::vector<int> user_of;  // [j][c]

    Assignment() = default;
    Assignment(int j, int c)
        : num_sbs(j), num_rbs(c), user_of(static_cast<std::size_t>(j) * c, 0) {}

    int& at(int j, int c) { return user_of[static_cast<std::size_t>(j) * num_rbs + c]; }
    int at(int j, int c) const { return user_of[static_cast<std::size_t>(j) * num_rbs + c]; }

    bool operator==(const Assignment& o) const { return user_of == o.user_of; }
};

/// Achievable rates r[i][j][c] in Mbit/s for the current power matrix.
struct RateTensor {
    int num_users = 0;
    int num_sbs = 0;
    int num_rbs = 0;
    std::vector<double> r;

    RateTensor() = default;
    RateTensor(int n, int j, int c)
        : num_users(n), num_sbs(j), num_rbs(c),
          r(static_cast<std::size_t>(n) * j * c, 0.0) {}

    double& at(int i, int j, int c) {
        return r[(static_cast<std::size_t>(i) * num_sbs + j) * num_rbs + c];
    }
    double at(int i, int j, int c) const {
        return r[(static_cast<std::size_t>(i) * num_sbs + j) * num_rbs + c];
    }
};

/// r = W*log2(1 + |h|^2 p / (sigma^2 + interference)), in Mbit/s.
inline RateTensor compute_rates(const ChannelTensor& H, const PowerMatrix& P,
                                double sigma2, double bandwidth_hz) {
    if (H.num_sbs != P.num_sbs || H.num_rbs != P.num_rbs)
        throw std::invalid_argument("compute_rates: dimension mismatch");
    const int N = H.num_users, J = H.num_sbs, C = H.num_rbs;
    RateTensor R(N, J, C);
    const double wm = bandwidth_hz * kMbps;
    for (int i = 0; i < N; ++i) {
        for (int c = 0; c < C; ++c) {
            double total = 0.0;  // sigma^2 + sum_k |h_ik|^2 p_k
            for (int k = 0; k < J; ++k) total += H.at(i, k, c) * P.at(k, c);
            for (int j = 0; j < J; ++j) {
                const double sig = H.at(i, j, c) * P.at(j, c);
                if (sig <= 0.0) {
                    R.at(i, j, c) = 0.0;
                    continue;
                }
                const double denom = sigma2 + (total - sig);
                R.at(i, j, c) = wm * std::log2(1.0 + sig / denom);
            }
        }
    }
    return R;
}

/// Per-user served throughput lambda_i in Mbit/s.
inline std::vector<double> user_throughputs(const Assignment& X, const RateTensor& R) {
    std::vector<double> lambda(R.num_users, 0.0);
    for (int j = 0; j < X.num_sbs; ++j)
        for (int c = 0; c < X.num_rbs; ++c)
            lambda[X.at(j, c)] += R.at(X.at(j, c), j, c);
    return lambda;
}

/// Per-SBS served load in Mbit/s.
inline std::vector<double> sbs_loads(const Assignment& X, const RateTensor& R) {
    std::vector<double> load(X.num_sbs, 0.0);
    for (int j = 0; j < X.num_sbs; ++j)
        for (int c = 0; c < X.num_rbs; ++c)
            load[j] += R.at(X.at(j, c), j, c);
    return load;
}

struct UtilityReport {
    std::vector<double> lambda;        // Mbit/s per user
    double utility = 0.0;              // nats; -inf if any user is starved
    std::vector<double> per_sbs_load;  // Mbit/s
    std::vector<double> slack;         // L_j = Z_j - load_j, filled when Z given
};

inline double log_utility(const std::vector<double>& lambda) {
    double u = 0.0;
    for (double l : lambda) {
        if (l <= 0.0) return -std::numeric_limits<double>::infinity();
        u += std::log(l);
    }
    return u;
}

inline UtilityReport utility(const Assignment& X, const RateTensor& R) {
    UtilityReport rep;
    rep.lambda = user_throughputs(X, R);
    rep.per_sbs_load = sbs_loads(X, R);
    rep.utility = log_utility(rep.lambda);
    return rep;
}

/// L_j = Z_j - load_j; negative slack signals a violated backhaul constraint.
inline std::vector<double> backhaul_slack(const Assignment& X, const RateTensor& R,
                                          const std::vector<double>& Z) {
    std::vector<double> load = sbs_loads(X, R);
    std::vector<double> L(load.size());
    for (std::size_t j = 0; j < load.size(); ++j) L[j] = Z[j] - load[j];
    return L;
}

inline UtilityReport utility(const Assignment& X, const RateTensor& R,
                             const std::vector<double>& Z) {
    UtilityReport rep = utility(X, R);
    rep.slack.resize(Z.size());
    for (std::size_t j = 0; j < Z.size(); ++j) rep.slack[j] = Z[j] - rep.per_sbs_load[j];
    return rep;
}

struct FeasibilityReport {
    bool ok = true;
    std::vector<std::string> violations;
};

/// True iff all L_j >= -tol_rel*Z_j and the PowerMatrix invariants hold.
inline FeasibilityReport is_feasible(const Assignment& X, const RateTensor& R,
                                     const std::vector<double>& Z, const PowerMatrix& P,
                                     double tol_rel = 1e-9) {
    FeasibilityReport rep;
    const std::vector<double> L = backhaul_slack(X, R, Z);
    for (std::size_t j = 0; j < L.size(); ++j) {
        if (L[j] < -tol_rel * Z[j]) {
            rep.ok = false;
            rep.violations.push_back("backhaul overload at sbs " + std::to_string(j));
        }
    }
    for (int j = 0; j < P.num_sbs; ++j) {
        double s = 0.0;
        bool neg = false;
        for (int c = 0; c < P.num_rbs; ++c) {
            if (P.at(j, c) < 0.0) neg = true;
            s += P.at(j, c);
        }
        if (neg) {
            rep.ok = false;
            rep.violations.push_back("negative power at sbs " + std::to_string(j));
        }
        if (s > P.p_max[j] * (1.0 + 1e-12)) {
            rep.ok = false;
            rep.violations.push_back("sum power cap exceeded at sbs " + std::to_string(j));
        }
    }
    return rep;
}

}  // namespace scopt

#endif
