#pragma once

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "nlbs/facelift.hpp"
#include "nlbs/grid.hpp"
#include "nlbs/impact.hpp"
#include "nlbs/payoff.hpp"
#include "nlbs/surface.hpp"

namespace nlbs {

struct NumericalBlowup : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonEllipticInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lagged-gamma row coefficients: given the lag gamma_bar at every node,
// fill c and b so that the implicit step sees F = c * (S^2 D2 w) + b.
// The cap branch sets c = 1/epsilon (the "infinite diffusion" device);
// the gamma-max lower clamp sets c = 0, b = -capital_lambda.
using LagCoeffFn =
    std::function<void(std::span<const double> gamma_bar, std::span<double> c,
                       std::span<double> b)>;

LagCoeffFn lag_coeffs_for(const ImpactSpec& impact, double sigma,
                          double epsilon);

struct SolveDiagnostics {
    // Per time step: max|v_{j+1} - v_j| for each nonlinear iteration taken.
    std::vector<std::vector<double>> nl_updates;
};

// Backward implicit solve of  u_t + (sigma^2/2) F(S^2 u_SS) = 0  with the
// lagged-gamma nonlinear iteration. Terminal data is the payoff sampled on
// the grid, face-lifted to the model's gamma bound when facelift_first is
// set and the model has one. When the model has a gamma bound, every
// backward iterate is also projected onto {S^2 D2 w <= bound} (the
// obstacle form of the capped equation), so the discrete gamma field never
// exceeds the bound at any time level.
PriceSurface solve(const Payoff& payoff, const ImpactSpec& impact,
                   double sigma, double maturity, const SpaceTimeGrid& grid,
                   bool facelift_first = true,
                   SolveDiagnostics* diag = nullptr);

// Same backward solve from explicit terminal values with arbitrary row
// coefficients (used by the penalized mu_n families). A finite gamma_cap
// enables the per-step constraint projection.
PriceSurface solve_with_coeffs(
    std::vector<double> terminal_values, const LagCoeffFn& coeffs,
    double sigma, double maturity, const SpaceTimeGrid& grid,
    SolveDiagnostics* diag = nullptr,
    double gamma_cap = std::numeric_limits<double>::infinity());

// One backward step of length dt from u_next; exposed for testing.
std::vector<double> step_nonlinear(std::span<const double> u_next,
                                   const ImpactSpec& impact, double sigma,
                                   double dt, const SpaceTimeGrid& grid,
                                   std::vector<double>* updates = nullptr);

// Tridiagonal elimination; throws NumericalBlowup on a pivot below 1e-14.
void solve_tridiagonal(std::span<const double> lower,
                       std::span<const double> diag,
                       std::span<const double> upper,
                       std::span<const double> rhs, std::span<double> out);

}  // namespace nlbs
