#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "nlbs/solver.hpp"
#include "nlbs/surface.hpp"

using namespace nlbs;

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Rate-free Black-Scholes value.
double bs_value(double s, double k, double sigma, double tau, bool call) {
    if (tau <= 0.0) return call ? std::max(s - k, 0.0) : std::max(k - s, 0.0);
    const double sd = sigma * std::sqrt(tau);
    const double d1 = std::log(s / k) / sd + 0.5 * sd;
    const double c = s * norm_cdf(d1) - k * norm_cdf(d1 - sd);
    return call ? c : c - s + k;
}

SpaceTimeGrid default_grid() {
    SpaceTimeGrid g;
    g.s_min = 20.0;
    g.s_max = 500.0;
    g.n_space = 400;
    g.n_time = 200;
    return g;
}

// The reference put configuration: mild linear
// impact with the bound far above the payoff's kink curvature.
SpaceTimeGrid reference_grid() {
    SpaceTimeGrid g;
    g.s_min = 20.0;
    g.s_max = 500.0;
    g.n_space = 200;
    g.n_time = 400;
    return g;
}

ImpactSpec linear(double lambda) {
    ImpactSpec s;
    s.model = ImpactSpec::Linear{lambda};
    return s;
}

ImpactSpec gamma_max(double capital_lambda) {
    ImpactSpec s;
    s.model = ImpactSpec::GammaMax{capital_lambda};
    return s;
}

}  // namespace

TEST_CASE("no-impact call matches the closed form at the money") {
    const auto g = default_grid();
    const auto surf = solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, g);
    CHECK(surf.interp_value(0.0, 100.0) ==
          doctest::Approx(7.9656).epsilon(0.005));
    CHECK(surf.interp_value(0.0, 100.0) ==
          doctest::Approx(bs_value(100.0, 100.0, 0.2, 1.0, true))
              .epsilon(0.004));
}

TEST_CASE("a linear claim is invariant under any impact model") {
    Payoff lin;
    lin.breakpoints = {{1.0, 1.0}};
    lin.left_slope = 1.0;
    lin.right_slope = 1.0;
    const auto g = default_grid();
    for (const auto& impact :
         {ImpactSpec{}, linear(0.01), gamma_max(30.0)}) {
        const auto surf = solve(lin, impact, 0.3, 1.0, g);
        // The log-grid stencil sees O(h^2) curvature on u(S) = S, so the
        // solve drifts by O(h^2) in relative terms, not to roundoff.
        for (std::size_t i = 0; i < surf.n_time(); ++i)
            for (std::size_t j = 0; j < surf.n_price(); ++j)
                CHECK(surf.value(i, j) ==
                      doctest::Approx(surf.prices[j]).epsilon(1e-6));
    }
}

TEST_CASE("terminal row equals the (lifted) payoff") {
    const auto g = default_grid();
    const auto prices = g.price_nodes();
    SUBCASE("plain payoff without a bound") {
        const auto surf = solve(Payoff::put(100.0), ImpactSpec{}, 0.2, 1.0, g);
        for (std::size_t j = 0; j < prices.size(); ++j)
            CHECK(surf.value(g.n_time, j) == Payoff::put(100.0)(prices[j]));
    }
    SUBCASE("face-lifted payoff when the bound binds") {
        const auto impact = linear(2.5e-3);
        const auto lifted = facelift(Payoff::put(100.0), 400.0, g);
        const auto surf = solve(Payoff::put(100.0), impact, 0.2, 1.0, g, true);
        for (std::size_t j = 0; j < prices.size(); ++j)
            CHECK(surf.value(g.n_time, j) == lifted.lifted_values[j]);
    }
}

TEST_CASE("step_nonlinear") {
    const auto g = default_grid();
    const auto prices = g.price_nodes();

    SUBCASE("zero-curvature data is a fixed point") {
        std::vector<double> u(prices.begin(), prices.end());
        const auto out = step_nonlinear(u, linear(0.01), 0.2, 0.01, g);
        for (std::size_t j = 0; j < u.size(); ++j)
            CHECK(out[j] == doctest::Approx(u[j]).epsilon(1e-7));
    }
    SUBCASE("one backward step reproduces the closed form") {
        std::vector<double> u(prices.size());
        for (std::size_t j = 0; j < u.size(); ++j)
            u[j] = bs_value(prices[j], 100.0, 0.2, 0.5, true);
        const double dt = 0.01;
        const auto out = step_nonlinear(u, ImpactSpec{}, 0.2, dt, g);
        for (std::size_t j = u.size() / 4; j < 3 * u.size() / 4; ++j)
            CHECK(out[j] ==
                  doctest::Approx(bs_value(prices[j], 100.0, 0.2, 0.5 + dt,
                                           true))
                      .epsilon(2e-4));
    }
    SUBCASE("dt must be positive") {
        std::vector<double> u(prices.begin(), prices.end());
        CHECK_THROWS_AS(step_nonlinear(u, ImpactSpec{}, 0.2, 0.0, g),
                        std::invalid_argument);
    }
    SUBCASE("one vs three nonlinear iterations away from maturity") {
        // Interior steps of the reference configuration have stagnated
        // updates, so extra iterations change nothing measurable.
        auto fg = reference_grid();
        const auto surf = solve(Payoff::put(100.0), linear(8e-5), 0.2, 1.0,
                                fg, true);
        const std::size_t mid = fg.n_time / 2;
        std::vector<double> u(surf.row(mid).begin(), surf.row(mid).end());
        const double dt = 1.0 / static_cast<double>(fg.n_time);
        fg.n_itnl = 1;
        const auto once = step_nonlinear(u, linear(8e-5), 0.2, dt, fg);
        fg.n_itnl = 3;
        const auto thrice = step_nonlinear(u, linear(8e-5), 0.2, dt, fg);
        double diff = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j)
            diff = std::max(diff, std::fabs(once[j] - thrice[j]));
        CHECK(diff <= 10.0 * 1e-9 * 80.0);  // 10 x nl_tol at payoff scale 80
    }
}

TEST_CASE("greeks") {
    const auto g = default_grid();
    SUBCASE("linear claim") {
        Payoff lin;
        lin.breakpoints = {{1.0, 1.0}};
        lin.left_slope = 1.0;
        lin.right_slope = 1.0;
        const auto surf = solve(lin, ImpactSpec{}, 0.2, 1.0, g);
        // Interior nodes only: the boundary delta is one-sided, and the
        // discrete gamma of u(S) = S on the log grid is O(S h^2).
        const double h = g.dx();
        for (std::size_t j = 1; j + 1 < surf.n_price(); ++j) {
            CHECK(surf.delta[surf.idx(0, j)] ==
                  doctest::Approx(1.0).epsilon(1e-4));
            CHECK(std::fabs(surf.gamma_c[surf.idx(0, j)]) <=
                  surf.prices[j] * h * h);
        }
    }
    SUBCASE("deep in-the-money call delta") {
        const auto surf =
            solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, g);
        CHECK(surf.interp_delta(0.0, 300.0) >= 0.995);
        CHECK(surf.interp_delta(0.0, 300.0) <= 1.001);
    }
    SUBCASE("call-spread gamma changes sign exactly once per time level") {
        const auto surf = solve(Payoff::call_spread(90.0, 110.0), ImpactSpec{},
                                0.2, 1.0, g);
        const double thresh = 1e-4;
        for (std::size_t i = 0; i < surf.n_time() - 1; i += 20) {
            int sign = 0, flips = 0;
            for (std::size_t j = 1; j + 1 < surf.n_price(); ++j) {
                const double gc = surf.gamma_c[surf.idx(i, j)];
                if (std::fabs(gc) < thresh) continue;
                const int s = gc > 0.0 ? 1 : -1;
                if (sign != 0 && s != sign) ++flips;
                sign = s;
            }
            CHECK(flips == 1);
        }
    }
}

TEST_CASE("pde_residual") {
    const auto g = default_grid();
    SUBCASE("linear claim has zero residual") {
        Payoff lin;
        lin.breakpoints = {{1.0, 1.0}};
        lin.left_slope = 1.0;
        lin.right_slope = 1.0;
        const auto surf = solve(lin, ImpactSpec{}, 0.2, 1.0, g);
        CHECK(pde_residual(surf, ImpactSpec{}, 0.2) <= 1e-7);
    }
    SUBCASE("solved surfaces satisfy their own scheme to solver tolerance") {
        // The residual re-evaluates the discrete operator, so a converged
        // solve leaves only the direct-solve roundoff, at any resolution.
        for (std::size_t n : {100u, 200u}) {
            auto gg = g;
            gg.n_space = 2 * n;
            gg.n_time = n;
            const auto s =
                solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, gg);
            CHECK(pde_residual(s, ImpactSpec{}, 0.2) <= 1e-8);
        }
    }
    SUBCASE("gamma-max surface residual is finite off the cap branch") {
        const auto surf =
            solve(Payoff::put(100.0), gamma_max(400.0), 0.2, 1.0, g, true);
        CHECK(std::isfinite(pde_residual(surf, gamma_max(400.0), 0.2)));
    }
}

TEST_CASE("comparison principle") {
    const auto g = reference_grid();
    // put(95) <= put(100) pointwise.
    const auto u1 = solve(Payoff::put(95.0), linear(8e-5), 0.2, 1.0, g, true);
    const auto u2 = solve(Payoff::put(100.0), linear(8e-5), 0.2, 1.0, g, true);
    const double tol_cmp =
        10.0 * static_cast<double>(g.n_time) * 2.3e-16 * 80.0;
    for (std::size_t k = 0; k < u1.values.size(); ++k)
        CHECK(u1.values[k] <= u2.values[k] + tol_cmp);
}

TEST_CASE("impact domination and continuity in lambda") {
    const auto g = reference_grid();
    const auto base =
        solve(Payoff::put(100.0), ImpactSpec{}, 0.2, 1.0, g, false);
    const double tol_cmp =
        10.0 * static_cast<double>(g.n_time) * 2.3e-16 * 80.0;

    double prev_dist = 1e300;
    for (double lambda : {8e-6, 8e-7, 8e-8}) {
        const auto u =
            solve(Payoff::put(100.0), linear(lambda), 0.2, 1.0, g, true);
        double dist = 0.0;
        for (std::size_t k = 0; k < u.values.size(); ++k) {
            CHECK(u.values[k] >= base.values[k] - tol_cmp);
            dist = std::max(dist, std::fabs(u.values[k] - base.values[k]));
        }
        CHECK(dist < prev_dist);
        prev_dist = dist;
    }
    CHECK(prev_dist <= 1e-3);  // vanishing impact recovers the base solve
}

TEST_CASE("gamma field respects the model bound at every node") {
    const auto g = default_grid();
    SUBCASE("linear") {
        const double lambda = 2.5e-3;
        const auto surf =
            solve(Payoff::put(100.0), linear(lambda), 0.2, 1.0, g, true);
        const double bound = 1.0 / lambda;
        for (double gc : surf.gamma_c) CHECK(gc <= bound * 1.02);
    }
    SUBCASE("gamma-max") {
        const auto surf =
            solve(Payoff::put(100.0), gamma_max(400.0), 0.2, 1.0, g, true);
        for (double gc : surf.gamma_c) CHECK(gc <= 400.0 * 1.02);
    }
}

TEST_CASE("nonlinear updates are non-increasing on the reference config") {
    const auto g = reference_grid();
    SolveDiagnostics diag;
    solve(Payoff::put(100.0), linear(8e-5), 0.2, 1.0, g, true, &diag);
    REQUIRE(diag.nl_updates.size() == g.n_time);
    for (const auto& updates : diag.nl_updates)
        for (std::size_t k = 1; k < updates.size(); ++k)
            CHECK(updates[k] <= updates[k - 1]);
}

TEST_CASE("tridiagonal solve against a dense oracle") {
    const std::size_t n = 12;
    std::vector<double> lower(n), diagv(n), upper(n), rhs(n), out(n);
    std::uint64_t z = 99;
    const auto rnd = [&z] {
        z = z * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>(z >> 11) * 0x1.0p-52 - 0.5;
    };
    for (std::size_t j = 0; j < n; ++j) {
        lower[j] = rnd();
        upper[j] = rnd();
        diagv[j] = 4.0 + rnd();  // diagonally dominant
        rhs[j] = rnd();
    }
    lower[0] = upper[n - 1] = 0.0;
    solve_tridiagonal(lower, diagv, upper, rhs, out);
    for (std::size_t j = 0; j < n; ++j) {
        double lhs = diagv[j] * out[j];
        if (j > 0) lhs += lower[j] * out[j - 1];
        if (j + 1 < n) lhs += upper[j] * out[j + 1];
        CHECK(lhs == doctest::Approx(rhs[j]).epsilon(1e-12));
    }

    SUBCASE("vanishing pivot is reported") {
        diagv.assign(n, 0.0);
        CHECK_THROWS_AS(solve_tridiagonal(lower, diagv, upper, rhs, out),
                        NumericalBlowup);
    }
}

TEST_CASE("surface export round trips") {
    SpaceTimeGrid g;
    g.s_min = 50.0;
    g.s_max = 200.0;
    g.n_space = 40;
    g.n_time = 10;
    const auto surf = solve(Payoff::call(100.0), linear(1e-4), 0.2, 1.0, g);

    SUBCASE("csv") {
        std::ostringstream os;
        export_csv(surf, os);
        std::istringstream is(os.str());
        const auto back = import_csv(is);
        REQUIRE(back.n_time() == surf.n_time());
        REQUIRE(back.n_price() == surf.n_price());
        for (std::size_t k = 0; k < surf.values.size(); ++k)
            CHECK(back.values[k] ==
                  doctest::Approx(surf.values[k]).epsilon(1e-10));
    }
    SUBCASE("json keeps metadata") {
        const auto back = import_json(export_json(surf));
        CHECK(back.meta.sigma == surf.meta.sigma);
        CHECK(back.meta.payoff_hash == surf.meta.payoff_hash);
        for (std::size_t k = 0; k < surf.values.size(); ++k)
            CHECK(back.values[k] == surf.values[k]);
    }
}

TEST_CASE("invalid inputs are rejected") {
    SpaceTimeGrid bad;
    bad.n_space = 2;
    CHECK_THROWS_AS(solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, bad),
                    std::invalid_argument);
    ImpactSpec neg;
    neg.model = ImpactSpec::Linear{-1.0};
    CHECK_THROWS_AS(solve(Payoff::call(100.0), neg, 0.2, 1.0, default_grid()),
                    std::invalid_argument);
}
