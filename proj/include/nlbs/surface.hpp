#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlbs/impact.hpp"

namespace nlbs {

// Solver output: u(t_i, S_j) with derived greeks on a log-price grid.
// Row-major, time-major storage: value(i, j) = values[i * prices.size() + j].
struct PriceSurface {
    std::vector<double> times;   // increasing, times.back() = maturity
    std::vector<double> prices;  // log-spaced, increasing
    std::vector<double> values;
    std::vector<double> delta;    // dU/dS
    std::vector<double> gamma_c;  // S^2 d2U/dS2

    struct Metadata {
        ImpactSpec impact;
        double sigma = 0.0;
        std::uint64_t payoff_hash = 0;
    };
    Metadata meta;

    std::size_t n_time() const { return times.size(); }
    std::size_t n_price() const { return prices.size(); }
    std::size_t idx(std::size_t i, std::size_t j) const {
        return i * prices.size() + j;
    }
    double value(std::size_t i, std::size_t j) const {
        return values[idx(i, j)];
    }

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * prices.size(), prices.size()};
    }

    // Bilinear interpolation in (t, ln S). Clamps t to the time range;
    // throws std::out_of_range if s is outside [prices.front(), back()].
    double interp(const std::vector<double>& field, double t, double s) const;
    double interp_value(double t, double s) const { return interp(values, t, s); }
    double interp_delta(double t, double s) const { return interp(delta, t, s); }
    double interp_gamma_c(double t, double s) const {
        return interp(gamma_c, t, s);
    }
};

// Centered differences in log-price with the chain rule
// delta = u_x / S, gamma_c = u_xx - u_x; one-sided at the boundaries.
// Fills surface.delta and surface.gamma_c in place.
void compute_greeks(PriceSurface& surface);

// Per-time-level greeks for a single row of nodal values.
void greeks_row(std::span<const double> u, std::span<const double> prices,
                double dx, std::span<double> delta_out,
                std::span<double> gamma_c_out);

// Max interior residual |Dt u + sigma^2/2 F(gamma_c)| excluding nodes where
// the cap branch is active. Payoff units per year.
double pde_residual(const PriceSurface& surface, const ImpactSpec& impact,
                    double sigma, double epsilon = 1e-3);

// CSV: header "t,S,u,delta,gamma_c", time-major rows, 12 significant digits.
void export_csv(const PriceSurface& surface, std::ostream& os);
PriceSurface import_csv(std::istream& is);

// JSON mirrors the CSV fields plus metadata.
std::string export_json(const PriceSurface& surface);
PriceSurface import_json(const std::string& text);

}  // namespace nlbs
