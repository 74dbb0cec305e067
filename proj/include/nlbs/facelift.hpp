#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlbs/grid.hpp"
#include "nlbs/payoff.hpp"

namespace nlbs {

// Discrete least super-solution of the terminal gamma constraint
// S^2 u_SS <= capital_lambda, computed on the solver grid.
struct FaceliftResult {
    std::vector<double> lifted_values;  // one per grid node
    std::vector<bool> active_set;       // constraint binds at the node
    double max_violation = 0.0;         // residual of S^2 D2 v - Lambda
    std::size_t sweeps = 0;
};

struct FaceliftParams {
    double tol = 1e-8;            // absolute, payoff units
    std::size_t max_sweeps = 100000;
    double omega = 0.0;           // PSOR over-relaxation; <= 0 picks the
                                  // near-optimal value for the grid size
};

// Smallest grid function v >= payoff with S^2 D2 v <= capital_lambda at
// interior nodes (the discrete obstacle problem, solved by projected SOR).
// capital_lambda = +inf returns the payoff samples unchanged.
// Throws std::runtime_error (NonConvergence) if the sweep budget runs out.
FaceliftResult facelift(const Payoff& payoff, double capital_lambda,
                        const SpaceTimeGrid& grid,
                        const FaceliftParams& params = {});

// In-place PSOR: replaces v by the smallest function >= v satisfying the
// discrete constraint S^2 D2 v <= bound, endpoints fixed. dx is the
// log-price spacing. Returns the sweep count.
std::size_t gamma_envelope_inplace(std::span<double> v, double bound,
                                   double dx,
                                   const FaceliftParams& params = {});

}  // namespace nlbs
