#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace nlbs {

// Log-spaced price grid plus time stepping and scheme parameters.
struct SpaceTimeGrid {
    double s_min = 20.0;
    double s_max = 500.0;
    std::size_t n_space = 400;  // log-spaced nodes, >= 3
    std::size_t n_time = 200;   // steps on [0, T], >= 1
    double epsilon = 1e-3;      // cap parameter
    std::size_t n_itnl = 3;     // nonlinear iterations per step
    double nl_tol = 0.0;        // early-exit tolerance; 0 picks the default

    bool valid() const {
        return s_min > 0.0 && s_max > s_min && n_space >= 3 && n_time >= 1 &&
               epsilon > 0.0 && n_itnl >= 1;
    }

    // Uniform spacing in x = ln S.
    double dx() const {
        return (std::log(s_max) - std::log(s_min)) /
               static_cast<double>(n_space - 1);
    }

    std::vector<double> log_nodes() const {
        std::vector<double> x(n_space);
        const double x0 = std::log(s_min);
        const double h = dx();
        for (std::size_t j = 0; j < n_space; ++j)
            x[j] = x0 + h * static_cast<double>(j);
        return x;
    }

    std::vector<double> price_nodes() const {
        auto x = log_nodes();
        for (auto& v : x) v = std::exp(v);
        return x;
    }
};

}  // namespace nlbs
