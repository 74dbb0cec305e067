#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "nlbs/hedge.hpp"
#include "nlbs/solver.hpp"

using namespace nlbs;

namespace {

SpaceTimeGrid hedge_grid() {
    SpaceTimeGrid g;
    g.s_min = 20.0;
    g.s_max = 500.0;
    g.n_space = 400;
    g.n_time = 400;
    return g;
}

ImpactSpec linear(double lambda) {
    ImpactSpec s;
    s.model = ImpactSpec::Linear{lambda};
    return s;
}

HedgeRunConfig base_config(const PriceSurface& surf, const ImpactSpec& impact) {
    HedgeRunConfig c;
    c.surface = &surf;
    c.impact = impact;
    c.sigma = 0.2;
    c.s0 = 100.0;
    c.n_steps = 100;
    c.n_paths = 500;
    c.seed = 42;
    return c;
}

}  // namespace

TEST_CASE("zero volatility hedges exactly") {
    const auto g = hedge_grid();
    // sigma = 0 freezes the price path; the hedge error reduces to the
    // time-interpolation of the surface, which vanishes at machine scale.
    const auto surf = solve(Payoff::call(100.0), ImpactSpec{}, 1e-8, 1.0, g);
    auto c = base_config(surf, ImpactSpec{});
    c.sigma = 1e-8;
    c.n_paths = 64;
    const auto rep = simulate(c);
    CHECK(rep.escaped == 0);
    CHECK(rep.max_abs_error <= 1e-5);
}

TEST_CASE("no-impact refinement error strictly decreases") {
    const auto g = hedge_grid();
    const auto surf = solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, g);
    auto c = base_config(surf, ImpactSpec{});
    c.n_paths = 2000;
    const auto rows = refinement_study(c, {50, 100, 200});
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].rms_error < rows[0].rms_error);
    CHECK(rows[2].rms_error < rows[1].rms_error);
}

TEST_CASE("impact term is pathwise nonnegative under linear impact") {
    const auto g = hedge_grid();
    const auto impact = linear(8e-5);
    const auto surf = solve(Payoff::put(100.0), impact, 0.2, 1.0, g, true);
    auto c = base_config(surf, impact);
    c.n_paths = 2000;
    const auto rep = simulate(c);
    for (const auto& p : rep.paths) {
        if (p.escaped) continue;
        CHECK(p.impact_term >= 0.0);
    }
}

TEST_CASE("fixed seed is deterministic across worker counts") {
    const auto g = hedge_grid();
    const auto impact = linear(8e-5);
    const auto surf = solve(Payoff::put(100.0), impact, 0.2, 1.0, g, true);
    auto c = base_config(surf, impact);
    c.n_paths = 512;

    setenv("NLBS_THREADS", "1", 1);
    const auto a = simulate(c);
    setenv("NLBS_THREADS", "4", 1);
    const auto b = simulate(c);
    unsetenv("NLBS_THREADS");

    REQUIRE(a.paths.size() == b.paths.size());
    CHECK(a.rms_error == b.rms_error);
    CHECK(a.mean_error == b.mean_error);
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        CHECK(a.paths[i].s_tilde_T == b.paths[i].s_tilde_T);
        CHECK(a.paths[i].error == b.paths[i].error);
    }

    SUBCASE("different seeds give different paths") {
        auto c2 = c;
        c2.seed = 43;
        const auto d = simulate(c2);
        CHECK(d.paths[0].s_tilde_T != a.paths[0].s_tilde_T);
    }
}

TEST_CASE("refinement_study input validation") {
    const auto g = hedge_grid();
    const auto surf = solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, g);
    auto c = base_config(surf, ImpactSpec{});
    c.n_paths = 8;
    CHECK_THROWS_AS(refinement_study(c, {}), std::invalid_argument);
    CHECK_THROWS_AS(refinement_study(c, {100, 50}), std::invalid_argument);
    CHECK_THROWS_AS(refinement_study(c, {30, 100}), std::invalid_argument);
}

TEST_CASE("spot must lie strictly inside the surface price range") {
    const auto g = hedge_grid();
    const auto surf = solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, g);
    auto c = base_config(surf, ImpactSpec{});
    c.s0 = 19.0;
    CHECK_THROWS_AS(simulate(c), std::invalid_argument);
    c.s0 = 1000.0;
    CHECK_THROWS_AS(simulate(c), std::invalid_argument);
}

TEST_CASE("feedback separates the supplied price from the plain one") {
    const auto g = hedge_grid();
    const auto impact = linear(8e-5);
    const auto surf = solve(Payoff::put(100.0), impact, 0.2, 1.0, g, true);
    auto c = base_config(surf, impact);
    const auto rep = simulate(c);
    std::size_t moved = 0;
    for (const auto& p : rep.paths) {
        if (p.escaped) continue;
        if (p.s_tilde_T != p.s_plain_T) ++moved;
    }
    // mu > 1 wherever the put's gamma is positive, so nearly every path
    // accumulates extra quadratic variation.
    CHECK(moved > rep.paths.size() / 2);
}

TEST_CASE("seller tendency under a non-binding gamma cap") {
    const auto g = hedge_grid();
    ImpactSpec gm;
    gm.model = ImpactSpec::GammaMax{1e6};  // never binds; mu stays 1
    const auto surf = solve(Payoff::put(100.0), gm, 0.2, 1.0, g, true);
    auto c = base_config(surf, gm);
    c.n_paths = 2000;
    const auto rep = simulate(c);
    // With mu = 1 the impact term vanishes and the hedge is the plain
    // discrete delta hedge: small mean error, no singular paths.
    CHECK(rep.escaped == 0);
    CHECK(std::fabs(rep.mean_error) <= 0.05);
    for (const auto& p : rep.paths) CHECK(p.impact_term == 0.0);
}

TEST_CASE("report exports") {
    const auto g = hedge_grid();
    const auto surf = solve(Payoff::call(100.0), ImpactSpec{}, 0.2, 1.0, g);
    auto c = base_config(surf, ImpactSpec{});
    c.n_paths = 4;
    const auto rep = simulate(c);

    std::ostringstream os;
    export_report_csv(rep, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "path_id,S_T,delta_term,impact_term,error");
    std::size_t lines = 0;
    for (std::string l; std::getline(is, l);) ++lines;
    CHECK(lines == rep.paths.size());

    const auto js = export_report_summary_json(rep);
    CHECK(js.find("rms_error") != std::string::npos);
    CHECK(js.find("escaped") != std::string::npos);
}

TEST_CASE("a surface round-tripped through csv drives the same hedge") {
    const auto g = hedge_grid();
    const auto impact = linear(8e-5);
    const auto surf = solve(Payoff::put(100.0), impact, 0.2, 1.0, g, true);

    std::ostringstream os;
    export_csv(surf, os);
    std::istringstream is(os.str());
    auto back = import_csv(is);
    back.meta = surf.meta;
    compute_greeks(back);

    auto c1 = base_config(surf, impact);
    auto c2 = base_config(back, impact);
    const auto a = simulate(c1);
    const auto b = simulate(c2);
    // CSV keeps 12 significant digits, so the reports agree to that scale.
    CHECK(b.rms_error == doctest::Approx(a.rms_error).epsilon(1e-8));
    CHECK(b.mean_error == doctest::Approx(a.mean_error).epsilon(1e-6));
}
