#include "nlbs/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace nlbs {

namespace {

constexpr double kBaseSharpness = 4.0;

// Numerically stable softplus log(1 + exp(a*y))/a.
double softplus(double y, double a) {
    const double z = a * y;
    if (z > 30.0) return y;
    if (z < -30.0) return std::exp(z) / a;
    return std::log1p(std::exp(z)) / a;
}

}  // namespace

double MuFamily::mu(double gamma_c) const {
    const double a = kBaseSharpness * steepness;
    const double y = 1.0 - gamma_c / gamma_max;
    return softplus(1.0, a) / softplus(y, a);
}

MuFamily build_mu_family(double gamma_max, double n) {
    if (!(gamma_max > 0.0) || !(n >= 1.0))
        throw std::invalid_argument(
            "build_mu_family: gamma_max > 0 and n >= 1 required");
    return MuFamily{gamma_max, n};
}

std::vector<ConvergenceRow> convergence_study(
    const Payoff& payoff, double sigma, double gamma_max,
    const std::vector<double>& n_list, double maturity,
    const SpaceTimeGrid& grid, const ConvergenceWindow& window) {
    // The family's pointwise limit below the bound is 1/(1 - g/gamma_max),
    // so the limit obstacle problem is the linear model with
    // lambda = 1/gamma_max and the gamma constraint, not the plain
    // gamma-max diffusion.
    ImpactSpec reference_impact;
    reference_impact.model = ImpactSpec::Linear{1.0 / gamma_max};
    const auto reference =
        solve(payoff, reference_impact, sigma, maturity, grid, true);

    // The penalized runs share the reference's face-lifted terminal data:
    // the constrained solution lifts instantly anyway, and sharing the
    // terminal makes the distance column measure penalization error
    // instead of the terminal-layer transient.
    const auto terminal =
        facelift(payoff, gamma_max, grid).lifted_values;

    std::vector<PriceSurface> penalized(n_list.size());
    std::vector<std::exception_ptr> errors(n_list.size());
    const double cap = 1.0 / grid.epsilon;

    auto solve_one = [&](std::size_t k) {
        try {
            const MuFamily family = build_mu_family(gamma_max, n_list[k]);
            // Tangent rows of the slope-capped F_n, the same linearization
            // the Linear model uses: Newton steps contract where the secant
            // mu_n(lag) two-cycles near the bound.
            const double dg = 1e-6 * gamma_max;
            auto f_prime = [&family, dg](double g) {
                return (family.F(g + dg) - family.F(g - dg)) / (2.0 * dg);
            };
            double g_star = gamma_max;
            {
                double lo = 0.0, hi = gamma_max;
                while (f_prime(hi) < cap) hi *= 2.0;
                for (int it = 0; it < 200 && hi - lo > dg; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (f_prime(mid) < cap ? lo : hi) = mid;
                }
                g_star = 0.5 * (lo + hi);
            }
            const double b_hi = family.F(g_star) - cap * g_star;
            LagCoeffFn coeffs = [&family, f_prime, cap, g_star, b_hi](
                                    std::span<const double> g,
                                    std::span<double> c, std::span<double> b) {
                for (std::size_t j = 0; j < g.size(); ++j) {
                    if (g[j] < g_star) {
                        c[j] = f_prime(g[j]);
                        b[j] = family.F(g[j]) - c[j] * g[j];
                    } else {
                        c[j] = cap;
                        b[j] = b_hi;
                    }
                }
            };
            penalized[k] = solve_with_coeffs(terminal, coeffs, sigma,
                                             maturity, grid);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_list.size(); ++k)
        pool.emplace_back(solve_one, k);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Interior window: t <= T*(1 - margin), middle half of the price axis.
    const double t_cut = maturity * (1.0 - window.time_margin_frac);
    const std::size_t j_lo = grid.n_space / 4;
    const std::size_t j_hi = 3 * grid.n_space / 4;

    std::vector<ConvergenceRow> rows;
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        const auto& u_n = penalized[k];
        ConvergenceRow row;
        row.n = n_list[k];
        for (std::size_t i = 0; i < u_n.n_time(); ++i) {
            if (u_n.times[i] > t_cut) break;
            for (std::size_t j = j_lo; j <= j_hi; ++j) {
                const std::size_t idx = u_n.idx(i, j);
                row.sup_distance =
                    std::max(row.sup_distance,
                             std::fabs(u_n.values[idx] -
                                       reference.values[idx]));
                row.max_gamma_excess = std::max(
                    row.max_gamma_excess, u_n.gamma_c[idx] - gamma_max);
            }
        }
        row.max_gamma_excess = std::max(row.max_gamma_excess, 0.0);
        rows.push_back(row);
    }
    return rows;
}

void export_convergence_csv(const std::vector<ConvergenceRow>& rows,
                            std::ostream& os) {
    os << "n,sup_distance,max_gamma_excess\n";
    char buf[120];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%g,%.11e,%.11e\n", r.n,
                      r.sup_distance, r.max_gamma_excess);
        os << buf;
    }
}

}  // namespace nlbs
