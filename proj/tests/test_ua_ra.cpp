#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scopt/ua_ra.hpp"

using namespace scopt;

namespace {

RateTensor random_rates(int n, int j, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.2, 4.0);
    RateTensor R(n, j, c);
    for (auto& v : R.r) v = u(rng);
    return R;
}

}  // namespace

TEST_CASE("zeta values") {
    RateTensor R(1, 1, 3);
    R.at(0, 0, 0) = 1.0;
    R.at(0, 0, 1) = 3.0;
    R.at(0, 0, 2) = 1.0;

    SUBCASE("only slot held gives the +inf sentinel") {
        RateTensor R1(1, 1, 1);
        R1.at(0, 0, 0) = 2.0;
        Assignment X1(1, 1);
        const PricingState ps = PricingState::from(X1, R1);
        CHECK(std::isinf(ps.zeta(X1, R1, 0, 0, 0)));
    }

    SUBCASE("held slot rate 1 with 4 elsewhere gives 1/4") {
        Assignment X(1, 3);  // user 0 everywhere: lambda = 5
        const PricingState ps = PricingState::from(X, R);
        CHECK(ps.zeta(X, R, 0, 0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    }

    SUBCASE("unheld slot with lambda 5 gives 1/5") {
        Assignment X(1, 3);  // user 0 holds all, user 1 nothing
        RateTensor Rb(2, 1, 3);
        for (int c = 0; c < 3; ++c) {
            Rb.at(0, 0, c) = R.at(0, 0, c);
            Rb.at(1, 0, c) = 0.5;
        }
        PricingState ps = PricingState::from(X, Rb);
        ps.lambda[1] = 5.0;  // pretend user 1 has throughput elsewhere
        CHECK(ps.zeta(X, Rb, 1, 0, 0) == doctest::Approx(0.2).epsilon(1e-15));
    }

    SUBCASE("zeta_of oracle agrees with PricingState") {
        const RateTensor Rr = random_rates(3, 2, 3, 21);
        Assignment X(2, 3);
        std::mt19937_64 rng(4);
        for (auto& u : X.user_of) u = static_cast<int>(rng() % 3);
        const PricingState ps = PricingState::from(X, Rr);
        const std::vector<double> z = zeta_of(X, Rr);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j)
                for (int c = 0; c < 3; ++c) {
                    const double a = z[(static_cast<std::size_t>(i) * 2 + j) * 3 + c];
                    const double b = ps.zeta(X, Rr, i, j, c);
                    if (std::isinf(a))
                        CHECK(std::isinf(b));
                    else
                        CHECK(a == doctest::Approx(b).epsilon(1e-12));
                }
    }
}

TEST_CASE("allocate_rb") {
    RateTensor R(2, 1, 2);
    R.at(0, 0, 0) = 2.0;
    R.at(1, 0, 0) = 1.0;
    R.at(0, 0, 1) = 1.0;
    R.at(1, 0, 1) = 1.0;
    Assignment X(1, 2);
    X.at(0, 0) = 0;
    X.at(0, 1) = 1;  // lambda = (2, 1); zeta on slot 0: (inf shields?) no:
    PricingState ps = PricingState::from(X, R);
    ps.lambda = {3.0, 2.0};  // decouple from X for a clean product check

    SUBCASE("nu = 0 picks the larger product") {
        // zeta(0,slot0) = 1/(3-2) = 1, zeta(1,slot0) = 1/2
        // products: 2*1 = 2 vs 1*0.5 = 0.5 -> user 0
        ps.nu = {0.0};
        CHECK(allocate_rb(0, 0, R, ps, X) == 0);
    }

    SUBCASE("nu = 2 steers to the smaller rate") {
        // products: 2*(1-2) = -2 vs 1*(0.5-2) = -1.5 -> user 1
        ps.nu = {2.0};
        CHECK(allocate_rb(0, 0, R, ps, X) == 1);
    }

    SUBCASE("infinite zeta dominates") {
        PricingState ps2 = PricingState::from(X, R);
        // user 1 only holds slot 1; on slot 1 its zeta is +inf
        ps2.nu = {100.0};
        CHECK(allocate_rb(0, 1, R, ps2, X) == 1);
    }
}

TEST_CASE("sweep") {
    SUBCASE("fixed point reports no change") {
        RateTensor R(2, 1, 2);
        R.at(0, 0, 0) = 3.0;
        R.at(1, 0, 0) = 2.0;
        R.at(0, 0, 1) = 1.0;
        R.at(1, 0, 1) = 2.0;
        Assignment X(1, 2);
        X.at(0, 0) = 0;
        X.at(0, 1) = 1;  // lambda = (3, 2): the PF optimum here
        PricingState ps = PricingState::from(X, R);
        CHECK_FALSE(sweep(X, R, ps));
        CHECK(X.at(0, 0) == 0);
        CHECK(X.at(0, 1) == 1);
    }

    SUBCASE("converges to a 2-distance ring solution from a bad start") {
        RateTensor R(2, 1, 2);
        R.at(0, 0, 0) = 3.0;
        R.at(0, 0, 1) = 1.0;
        R.at(1, 0, 0) = 2.0;
        R.at(1, 0, 1) = 2.0;
        Assignment X(1, 2);  // both slots to user 0
        PricingState ps = PricingState::from(X, R);
        for (int pass = 0; pass < 10; ++pass)
            if (!sweep(X, R, ps)) break;
        // no single-slot reassignment may improve the result
        CHECK(verify_ring_solution(X, R).is_ring);
        CHECK(log_utility(ps.lambda) > -1e300);  // nobody starves anymore
    }

    SUBCASE("utility is nondecreasing across sweeps with nu = 0") {
        const RateTensor R = random_rates(4, 2, 4, 31);
        Assignment X(2, 4);
        std::mt19937_64 rng(9);
        for (auto& u : X.user_of) u = static_cast<int>(rng() % 4);
        PricingState ps = PricingState::from(X, R);
        double prev = log_utility(ps.lambda);
        for (int pass = 0; pass < 20; ++pass) {
            const bool changed = sweep(X, R, ps);
            const double u = log_utility(ps.lambda);
            CHECK(u >= prev - 1e-12);
            prev = u;
            if (!changed) break;
        }
    }

    SUBCASE("incremental lambda stays consistent to 1e-12") {
        const RateTensor R = random_rates(5, 2, 5, 32);
        Assignment X(2, 5);
        std::mt19937_64 rng(10);
        for (auto& u : X.user_of) u = static_cast<int>(rng() % 5);
        PricingState ps = PricingState::from(X, R);
        for (int pass = 0; pass < 5; ++pass) sweep(X, R, ps);
        const std::vector<double> lam = user_throughputs(X, R);
        for (int i = 0; i < 5; ++i)
            CHECK(ps.lambda[i] == doctest::Approx(lam[i]).epsilon(1e-12));
        // and therefore the derived zeta tensor matches the scratch oracle
        const std::vector<double> z = zeta_of(X, R);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 2; ++j)
                for (int c = 0; c < 5; ++c) {
                    const double a = z[(static_cast<std::size_t>(i) * 2 + j) * 5 + c];
                    const double b = ps.zeta(X, R, i, j, c);
                    if (std::isinf(a))
                        CHECK(std::isinf(b));
                    else
                        CHECK(a == doctest::Approx(b).epsilon(1e-12));
                }
    }
}

TEST_CASE("nu_step") {
    SUBCASE("slack load keeps nu at zero") {
        const RateTensor R = random_rates(2, 1, 2, 41);
        Assignment X(1, 2);
        X.at(0, 1) = 1;
        PricingState ps = PricingState::from(X, R);
        CHECK(nu_step(0, X, R, {1e6}, ps) == 0.0);
    }

    SUBCASE("overload strictly increases nu") {
        const RateTensor R = random_rates(2, 1, 2, 42);
        Assignment X(1, 2);
        X.at(0, 1) = 1;
        PricingState ps = PricingState::from(X, R);
        const double nu = nu_step(0, X, R, {0.01}, ps);
        CHECK(nu > 0.0);
    }

    SUBCASE("dynamic step reaches the nearest breakpoint") {
        // Hand-built: J=1, C=3, N=2; X = (u0, u0, u1)
        // lambda = (2, 2); overload with Z = 0.1, load = 4.
        // slot 0: cur u0 (r=1, zeta=1), alt u1 (r=3, zeta=1/2)
        //   beta = (3*0.5 - 1*1)/(3 - 1) = 0.25
        // slot 1: cur u0 (r=1, zeta=1), alt u1 (r=0.1, zeta=1/2)
        //   beta = (0.05 - 1)/(0.1 - 1) ~ 1.0556
        // slot 2: cur u1 zeta = inf -> skipped
        // nearest breakpoint above nu=0 is 0.25 -> nu jumps exactly there.
        RateTensor R(2, 1, 3);
        R.at(0, 0, 0) = 1.0;
        R.at(0, 0, 1) = 1.0;
        R.at(0, 0, 2) = 0.1;
        R.at(1, 0, 0) = 3.0;
        R.at(1, 0, 1) = 0.1;
        R.at(1, 0, 2) = 2.0;
        Assignment X(1, 3);
        X.at(0, 2) = 1;
        PricingState ps = PricingState::from(X, R);
        const double nu = nu_step(0, X, R, {0.1}, ps);
        CHECK(nu == doctest::Approx(0.25).epsilon(1e-12));
        // the breakpoint is exactly where the slot-0 winner flips
        ps.nu[0] = nu - 0.05;
        CHECK(allocate_rb(0, 0, R, ps, X) == 1);
        ps.nu[0] = nu + 0.05;
        CHECK(allocate_rb(0, 0, R, ps, X) == 0);
    }
}

TEST_CASE("run_algorithm1") {
    SUBCASE("huge Z: nu stays 0 and the output is a ring solution") {
        const RateTensor R = random_rates(5, 2, 5, 51);
        Alg1Result res = run_algorithm1(R, {1e6, 1e6}, PricingState{{}, {}, 1e-4, {}},
                                        Alg1Budgets{10, 400});
        CHECK(res.converged);
        CHECK(res.feasible);
        for (double v : res.ps.nu) CHECK(v == 0.0);
        CHECK(verify_ring_solution(res.X, R).is_ring);
    }

    SUBCASE("budgets (1,1) run one sweep and one nu update per SBS") {
        const RateTensor R = random_rates(3, 2, 3, 52);
        Alg1Result res = run_algorithm1(R, {0.01, 0.01}, PricingState{{}, {}, 1e-4, {}},
                                        Alg1Budgets{1, 1});
        CHECK(res.ps.nu_history.size() == 1);
        REQUIRE(res.zeta_passes.size() == 2);
        for (int p : res.zeta_passes) CHECK(p == 1);
    }

    SUBCASE("hopeless Z drives the load down through nu phases") {
        // 2 users on 4 slots: each keeps a fallback slot, so pricing can
        // move the others toward cheaper rates as nu grows.
        const RateTensor R = random_rates(2, 1, 4, 53);
        // Z below any achievable load: never feasible, but pricing must
        // still push the served load down.
        Alg1Result res = run_algorithm1(R, {0.01}, PricingState{{}, {}, 1e-4, {}},
                                        Alg1Budgets{10, 50});
        CHECK_FALSE(res.feasible);
        REQUIRE(res.trace.size() >= 2);
        CHECK(res.trace.back().load[0] < res.trace.front().load[0]);
        CHECK(res.trace.back().nu[0] > res.trace.front().nu[0]);
    }
}

TEST_CASE("verify_ring_solution") {
    SUBCASE("single user is always a ring solution") {
        const RateTensor R = random_rates(1, 2, 3, 61);
        Assignment X(2, 3);
        CHECK(verify_ring_solution(X, R).is_ring);
    }

    SUBCASE("perturbing a ring solution breaks it with positive gap") {
        const RateTensor R = random_rates(3, 2, 3, 62);
        Alg1Result res = run_algorithm1(R, {1e6, 1e6}, PricingState{{}, {}, 1e-4, {}},
                                        Alg1Budgets{10, 400});
        REQUIRE(verify_ring_solution(res.X, R).is_ring);
        Assignment X = res.X;
        X.at(0, 0) = (X.at(0, 0) + 1) % 3;  // move one slot off the optimum
        const RingReport rep = verify_ring_solution(X, R);
        CHECK_FALSE(rep.is_ring);
        CHECK(rep.worst_neighbor_gap > 0.0);
    }
}

TEST_CASE("gap_bound") {
    const RateTensor R = random_rates(2, 2, 2, 71);
    Assignment X(2, 2);
    X.at(0, 1) = 1;
    X.at(1, 0) = 1;
    const std::vector<double> load = sbs_loads(X, R);

    SUBCASE("nu = 0 gives bound 0") {
        PricingState ps = PricingState::from(X, R);
        CHECK(gap_bound(X, R, {load[0] + 1.0, load[1] + 2.0}, ps) == 0.0);
    }

    SUBCASE("hand product max") {
        PricingState ps = PricingState::from(X, R);
        ps.nu = {0.5, 0.1};
        // slacks (1, 2) -> products (0.5, 0.2) -> bound 0.5
        CHECK(gap_bound(X, R, {load[0] + 1.0, load[1] + 2.0}, ps) ==
              doctest::Approx(0.5).epsilon(1e-12));
    }

    SUBCASE("negative slack violates the precondition") {
        PricingState ps = PricingState::from(X, R);
        CHECK_THROWS_AS(gap_bound(X, R, {load[0] - 1.0, load[1]}, ps),
                        std::invalid_argument);
    }
}
