#pragma once

#include <vector>

#include "nlbs/grid.hpp"
#include "nlbs/payoff.hpp"
#include "nlbs/solver.hpp"

namespace nlbs {

// Smooth amplification family mu_n approaching the gamma-max limit:
// mu_n(g) = sp_n(1) / sp_n(1 - g/gamma_max) with sp_n a softplus of
// sharpness growing with n, so mu_n(0) = 1 exactly, mu_n > 0 everywhere,
// and mu_n diverges past gamma_max as n grows.
struct MuFamily {
    double gamma_max = 0.0;
    double steepness = 1.0;  // index n >= 1

    double mu(double gamma_c) const;
    double F(double gamma_c) const { return gamma_c * mu(gamma_c); }
};

// Throws std::invalid_argument (InvalidParams) on nonpositive inputs.
MuFamily build_mu_family(double gamma_max, double n);

struct ConvergenceRow {
    double n = 0.0;
    double sup_distance = 0.0;      // vs the gamma-max reference, interior window
    double max_gamma_excess = 0.0;  // (max Gamma_c - gamma_max)^+ on the window
};

struct ConvergenceWindow {
    double time_margin_frac = 0.05;  // exclude t > T*(1 - frac)
    // Price window: middle half of the grid.
};

// Solves the penalized problem for each n against the face-lifted gamma-max
// reference and reports sup-norm distances on the interior window.
std::vector<ConvergenceRow> convergence_study(
    const Payoff& payoff, double sigma, double gamma_max,
    const std::vector<double>& n_list, double maturity,
    const SpaceTimeGrid& grid, const ConvergenceWindow& window = {});

void export_convergence_csv(const std::vector<ConvergenceRow>& rows,
                            std::ostream& os);

}  // namespace nlbs
