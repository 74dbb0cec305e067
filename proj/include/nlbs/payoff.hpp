#pragma once

#include <cstdint>
#include <vector>

namespace nlbs {

// Continuous piecewise-linear terminal claim defined by breakpoints, with
// slope extrapolation outside the breakpoint range.
struct Payoff {
    struct Breakpoint {
        double price;
        double value;
    };

    std::vector<Breakpoint> breakpoints;  // strictly increasing prices
    double left_slope = 0.0;
    double right_slope = 0.0;

    double operator()(double s) const;
    bool valid() const;

    // Content hash, used as surface metadata.
    std::uint64_t hash() const;

    static Payoff call(double strike);
    static Payoff put(double strike);
    static Payoff call_spread(double k_low, double k_high);
    // A short position: payoff scaled by -1.
    Payoff scaled(double factor) const;
};

double payoff_eval(const Payoff& payoff, double s);

}  // namespace nlbs
