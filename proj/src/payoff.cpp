#include "nlbs/payoff.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace nlbs {

double Payoff::operator()(double s) const {
    const auto& bp = breakpoints;
    if (bp.empty()) return 0.0;
    if (s <= bp.front().price)
        return bp.front().value - left_slope * (bp.front().price - s);
    if (s >= bp.back().price)
        return bp.back().value + right_slope * (s - bp.back().price);
    const auto it = std::upper_bound(
        bp.begin(), bp.end(), s,
        [](double x, const Breakpoint& b) { return x < b.price; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (s - lo.price) / (hi.price - lo.price);
    return lo.value + w * (hi.value - lo.value);
}

bool Payoff::valid() const {
    if (breakpoints.empty()) return false;
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (breakpoints[i].price <= breakpoints[i - 1].price) return false;
    }
    return breakpoints.front().price >= 0.0;
}

std::uint64_t Payoff::hash() const {
    // FNV-1a over the raw doubles.
    std::uint64_t h = 14695981039346656037ull;
    const auto mix = [&h](double x) {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (const auto& b : breakpoints) {
        mix(b.price);
        mix(b.value);
    }
    mix(left_slope);
    mix(right_slope);
    return h;
}

Payoff Payoff::call(double strike) {
    return Payoff{{{strike, 0.0}}, 0.0, 1.0};
}

Payoff Payoff::put(double strike) {
    return Payoff{{{strike, 0.0}}, -1.0, 0.0};
}

Payoff Payoff::call_spread(double k_low, double k_high) {
    return Payoff{{{k_low, 0.0}, {k_high, k_high - k_low}}, 0.0, 0.0};
}

Payoff Payoff::scaled(double factor) const {
    Payoff p = *this;
    for (auto& b : p.breakpoints) b.value *= factor;
    p.left_slope *= factor;
    p.right_slope *= factor;
    return p;
}

double payoff_eval(const Payoff& payoff, double s) { return payoff(s); }

}  // namespace nlbs
