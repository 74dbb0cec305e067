#include "nlbs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlbs/simd_kernels.hpp"

namespace nlbs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Interior gamma_bar = S^2 D2 v in log-price; zero at the boundaries.
void lag_gamma(std::span<const double> v, double dx, std::span<double> out) {
    const std::size_t n = v.size();
    simd::active_kernels().gamma_stencil(v.data(), n, 1.0 / (dx * dx),
                                         1.0 / (2.0 * dx), out.data());
    out[0] = 0.0;
    out[n - 1] = 0.0;
}

struct StepWorkspace {
    std::vector<double> gamma_bar, c, b, lower, diag, upper, rhs, w, v;
    explicit StepWorkspace(std::size_t n)
        : gamma_bar(n), c(n), b(n), lower(n), diag(n), upper(n), rhs(n), w(n),
          v(n) {}
};

// Complementarity step: projected SOR on the implicit rows with the gamma
// constraint as a floor. At every interior node either the equation row
// holds and S^2 D2 w <= bound, or the constraint binds and the row is
// slack (w above its equation value). Warm-started from the lag iterate.
void psor_step(StepWorkspace& ws, double gamma_cap, double h, double tol,
               std::size_t max_sweeps) {
    const std::size_t n = ws.w.size();
    const double ga = 1.0 / (h * h) + 1.0 / (2.0 * h);
    const double gc = 1.0 / (h * h) - 1.0 / (2.0 * h);
    const double gb = -2.0 / (h * h);
    const double omega = 1.5;

    auto& w = ws.w;
    w = ws.v;
    w[0] = ws.rhs[0];
    w[n - 1] = ws.rhs[n - 1];
    double update = std::numeric_limits<double>::infinity();
    std::size_t sweep = 0;
    while (update > tol) {
        if (++sweep > max_sweeps)
            throw NumericalBlowup("psor step: did not converge");
        update = 0.0;
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const double gs = (ws.rhs[j] - ws.lower[j] * w[j - 1] -
                               ws.upper[j] * w[j + 1]) /
                              ws.diag[j];
            const double relaxed = w[j] + omega * (gs - w[j]);
            const double q =
                (gamma_cap - ga * w[j - 1] - gc * w[j + 1]) / gb;
            const double wnew = std::max(q, relaxed);
            update = std::max(update, std::fabs(wnew - w[j]));
            w[j] = wnew;
        }
    }
}

// One backward step; v is the nonlinear lag on entry (usually u_next) and
// holds the step result on exit. A finite gamma_cap replaces the direct
// solve with the complementarity step, so the discrete gamma field never
// exceeds the bound at any time level.
void backward_step(std::span<const double> u_next, const LagCoeffFn& coeffs,
                   double sigma, double dt, const SpaceTimeGrid& grid,
                   double nl_tol, double gamma_cap, StepWorkspace& ws,
                   std::vector<double>* updates) {
    const std::size_t n = u_next.size();
    const double h = grid.dx();
    const double k = 0.5 * sigma * sigma * dt;
    const double a_lo = 1.0 / (h * h) + 1.0 / (2.0 * h);
    const double a_hi = 1.0 / (h * h) - 1.0 / (2.0 * h);
    const double a_di = 2.0 / (h * h);

    for (std::size_t it = 0; it < grid.n_itnl; ++it) {
        lag_gamma(ws.v, h, ws.gamma_bar);
        coeffs(ws.gamma_bar, ws.c, ws.b);

        // Row j: w_j - k*c_j*(S^2 D2 w)_j = u_next_j + k*b_j; identity rows
        // at the boundaries (gamma_c = 0 there, theta vanishes).
        ws.lower[0] = 0.0;
        ws.diag[0] = 1.0;
        ws.upper[0] = 0.0;
        ws.rhs[0] = u_next[0];
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const double kc = k * ws.c[j];
            ws.lower[j] = -kc * a_lo;
            ws.diag[j] = 1.0 + kc * a_di;
            ws.upper[j] = -kc * a_hi;
            ws.rhs[j] = u_next[j] + k * ws.b[j];
        }
        ws.lower[n - 1] = 0.0;
        ws.diag[n - 1] = 1.0;
        ws.upper[n - 1] = 0.0;
        ws.rhs[n - 1] = u_next[n - 1];

        if (std::isfinite(gamma_cap))
            psor_step(ws, gamma_cap, h, 1e-3 * nl_tol, 200000);
        else
            solve_tridiagonal(ws.lower, ws.diag, ws.upper, ws.rhs, ws.w);

        const double update =
            simd::active_kernels().max_abs_diff(ws.w.data(), ws.v.data(), n);
        ws.v = ws.w;
        if (updates) updates->push_back(update);
        if (update < nl_tol) break;
    }
}

double payoff_scale(std::span<const double> terminal) {
    double m = 1.0;
    for (double x : terminal) m = std::max(m, std::fabs(x));
    return m;
}

void check_ellipticity(std::span<const double> terminal, const LagCoeffFn&,
                       const ImpactSpec& impact, double sigma, double epsilon,
                       const SpaceTimeGrid& grid) {
    // Sample F over the terminal data's gamma range; reject decreasing F.
    const std::size_t n = terminal.size();
    std::vector<double> gb(n);
    lag_gamma(terminal, grid.dx(), gb);
    const auto [lo_it, hi_it] = std::minmax_element(gb.begin(), gb.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return;
    EffectiveNonlinearity nl{impact, sigma, epsilon};
    const double cap = nl.cap();
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 64; ++i) {
        const double g = lo + (hi - lo) * (i / 64.0);
        const double f = effective_F(g, nl);
        if (f == cap) continue;  // singular branch, infinite by convention
        const double slack = 1e-9 * (std::fabs(prev) + std::fabs(f) + 1.0);
        if (f < prev - slack)
            throw NonEllipticInput("effective F is decreasing on the payoff's "
                                   "gamma range");
        prev = std::max(prev, f);
    }
}

}  // namespace

void solve_tridiagonal(std::span<const double> lower,
                       std::span<const double> diag,
                       std::span<const double> upper,
                       std::span<const double> rhs, std::span<double> out) {
    const std::size_t n = diag.size();
    static thread_local std::vector<double> cp, dp;
    cp.resize(n);
    dp.resize(n);
    double pivot = diag[0];
    if (std::fabs(pivot) < 1e-14)
        throw NumericalBlowup("tridiagonal solve: zero pivot");
    cp[0] = upper[0] / pivot;
    dp[0] = rhs[0] / pivot;
    for (std::size_t j = 1; j < n; ++j) {
        pivot = diag[j] - lower[j] * cp[j - 1];
        if (std::fabs(pivot) < 1e-14)
            throw NumericalBlowup("tridiagonal solve: vanishing pivot");
        cp[j] = upper[j] / pivot;
        dp[j] = (rhs[j] - lower[j] * dp[j - 1]) / pivot;
    }
    out[n - 1] = dp[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) out[j] = dp[j] - cp[j] * out[j + 1];
}

LagCoeffFn lag_coeffs_for(const ImpactSpec& impact, double sigma,
                          double epsilon) {
    const double cap = 1.0 / epsilon;
    return std::visit(
        overloaded{
            [=](const ImpactSpec::NoImpact&) -> LagCoeffFn {
                return [](std::span<const double> g, std::span<double> c,
                          std::span<double> b) {
                    std::fill(c.begin(), c.end(), 1.0);
                    std::fill(b.begin(), b.end(), 0.0);
                    (void)g;
                };
            },
            [=](const ImpactSpec::Linear& l) -> LagCoeffFn {
                // Tangent rows of the slope-capped nonlinearity: F(g) =
                // g/(1 - lambda g) continued linearly with slope cap past
                // g_star where F' reaches the cap. The iteration is a
                // Newton step on a C^1 function, so it contracts, and the
                // continuation keeps the strong-diffusion behaviour that
                // detaches the solution from the gamma bound.
                const double lambda = l.lambda;
                const double root_eps = std::sqrt(epsilon);
                const double g_star =
                    lambda > 0.0
                        ? (1.0 - root_eps) / lambda
                        : std::numeric_limits<double>::infinity();
                const double b_hi =
                    lambda > 0.0 ? g_star / root_eps - cap * g_star : 0.0;
                return [=](std::span<const double> g, std::span<double> c,
                           std::span<double> b) {
                    for (std::size_t j = 0; j < g.size(); ++j) {
                        if (g[j] < g_star) {
                            const double inv = 1.0 / (1.0 - lambda * g[j]);
                            c[j] = inv * inv;
                            b[j] = -lambda * g[j] * g[j] * inv * inv;
                        } else {
                            c[j] = cap;
                            b[j] = b_hi;
                        }
                    }
                };
            },
            [=](const ImpactSpec::IntensityDependent& d) -> LagCoeffFn {
                const LambdaCurve curve = d.curve;
                return [=](std::span<const double> g, std::span<double> c,
                           std::span<double> b) {
                    for (std::size_t j = 0; j < g.size(); ++j) {
                        if (g[j] == 0.0) {
                            c[j] = 1.0;
                        } else {
                            const auto f =
                                solve_F_intensity(g[j], curve, sigma, cap);
                            c[j] = f ? std::min(*f / g[j], cap) : cap;
                        }
                    }
                    std::fill(b.begin(), b.end(), 0.0);
                };
            },
            [=](const ImpactSpec::GammaMax& gm) -> LagCoeffFn {
                const double L = gm.capital_lambda;
                return [=](std::span<const double> g, std::span<double> c,
                           std::span<double> b) {
                    // The upper branch stays at c = 1: the per-step envelope
                    // projection owns the constraint g <= L, so g can only
                    // exceed L by the projection tolerance.
                    for (std::size_t j = 0; j < g.size(); ++j) {
                        if (g[j] < -L) {
                            c[j] = 0.0;
                            b[j] = -L;
                        } else {
                            c[j] = 1.0;
                            b[j] = 0.0;
                        }
                    }
                };
            }},
        impact.model);
}

PriceSurface solve_with_coeffs(std::vector<double> terminal_values,
                               const LagCoeffFn& coeffs, double sigma,
                               double maturity, const SpaceTimeGrid& grid,
                               SolveDiagnostics* diag, double gamma_cap) {
    if (!grid.valid()) throw std::invalid_argument("solve: invalid grid");
    const std::size_t n = grid.n_space;
    const std::size_t nt = grid.n_time;
    const double dt = maturity / static_cast<double>(nt);
    const double scale = payoff_scale(terminal_values);
    const double nl_tol =
        grid.nl_tol > 0.0 ? grid.nl_tol : 1e-9 * scale;
    const double blowup = 1e6 * scale;

    PriceSurface surf;
    surf.prices = grid.price_nodes();
    surf.times.resize(nt + 1);
    for (std::size_t i = 0; i <= nt; ++i)
        surf.times[i] = maturity * static_cast<double>(i) /
                        static_cast<double>(nt);
    surf.values.assign((nt + 1) * n, 0.0);
    std::copy(terminal_values.begin(), terminal_values.end(),
              surf.values.begin() + nt * n);

    StepWorkspace ws(n);
    std::vector<double> u_next = std::move(terminal_values);
    for (std::size_t i = nt; i-- > 0;) {
        ws.v = u_next;
        std::vector<double>* upd = nullptr;
        if (diag) {
            diag->nl_updates.emplace_back();
            upd = &diag->nl_updates.back();
        }
        backward_step(u_next, coeffs, sigma, dt, grid, nl_tol, gamma_cap, ws,
                      upd);
        for (double x : ws.v)
            if (!std::isfinite(x) || std::fabs(x) > blowup)
                throw NumericalBlowup("solve: nodal value out of range");
        std::copy(ws.v.begin(), ws.v.end(), surf.values.begin() + i * n);
        u_next = ws.v;
    }
    compute_greeks(surf);
    return surf;
}

PriceSurface solve(const Payoff& payoff, const ImpactSpec& impact,
                   double sigma, double maturity, const SpaceTimeGrid& grid,
                   bool facelift_first, SolveDiagnostics* diag) {
    if (!grid.valid()) throw std::invalid_argument("solve: invalid grid");
    if (!impact.valid()) throw std::invalid_argument("solve: invalid impact");

    const auto prices = grid.price_nodes();
    std::vector<double> terminal(grid.n_space);
    for (std::size_t j = 0; j < grid.n_space; ++j)
        terminal[j] = payoff(prices[j]);

    const auto bound = impact.gamma_bound();
    if (facelift_first && bound) {
        const auto lifted = facelift(payoff, *bound, grid);
        terminal = lifted.lifted_values;
    }

    const auto coeffs = lag_coeffs_for(impact, sigma, grid.epsilon);
    check_ellipticity(terminal, coeffs, impact, sigma, grid.epsilon, grid);

    const double cap_value =
        bound ? *bound : std::numeric_limits<double>::infinity();
    auto surf =
        solve_with_coeffs(std::move(terminal), coeffs, sigma, maturity, grid,
                          diag, cap_value);
    surf.meta.impact = impact;
    surf.meta.sigma = sigma;
    surf.meta.payoff_hash = payoff.hash();
    return surf;
}

std::vector<double> step_nonlinear(std::span<const double> u_next,
                                   const ImpactSpec& impact, double sigma,
                                   double dt, const SpaceTimeGrid& grid,
                                   std::vector<double>* updates) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_nonlinear: dt <= 0");
    const std::size_t n = u_next.size();
    const double scale = payoff_scale(u_next);
    const double nl_tol = grid.nl_tol > 0.0 ? grid.nl_tol : 1e-9 * scale;
    const auto coeffs = lag_coeffs_for(impact, sigma, grid.epsilon);
    const auto bound = impact.gamma_bound();
    StepWorkspace ws(n);
    ws.v.assign(u_next.begin(), u_next.end());
    backward_step(u_next, coeffs, sigma, dt, grid, nl_tol,
                  bound ? *bound : std::numeric_limits<double>::infinity(),
                  ws, updates);
    return ws.v;
}

}  // namespace nlbs
