#include "nlbs/impact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlbs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double LambdaCurve::operator()(double intensity) const {
    return std::visit(
        overloaded{
            [](const Constant& c) { return c.lambda0; },
            [&](const PowerLaw& p) {
                return p.lambda0 *
                       std::pow(std::fabs(intensity / p.scale), p.exponent);
            },
            [&](const Table& t) {
                const auto& xs = t.intensity;
                const auto& ys = t.lambda;
                if (xs.empty()) return 0.0;
                if (intensity <= xs.front()) return ys.front();
                if (intensity >= xs.back()) return ys.back();
                const auto it =
                    std::upper_bound(xs.begin(), xs.end(), intensity);
                const std::size_t i = static_cast<std::size_t>(
                    std::distance(xs.begin(), it));
                const double w = (intensity - xs[i - 1]) / (xs[i] - xs[i - 1]);
                return ys[i - 1] + w * (ys[i] - ys[i - 1]);
            }},
        form);
}

bool LambdaCurve::valid() const {
    return std::visit(
        overloaded{
            [](const Constant& c) { return c.lambda0 >= 0.0; },
            [](const PowerLaw& p) {
                return p.lambda0 >= 0.0 && p.exponent > 0.0 && p.scale != 0.0;
            },
            [](const Table& t) {
                if (t.intensity.size() != t.lambda.size() ||
                    t.intensity.empty())
                    return false;
                for (std::size_t i = 0; i < t.lambda.size(); ++i) {
                    if (t.lambda[i] < 0.0) return false;
                    if (i > 0 && t.intensity[i] <= t.intensity[i - 1])
                        return false;
                }
                return true;
            }},
        form);
}

bool ImpactSpec::valid() const {
    return std::visit(
        overloaded{[](const NoImpact&) { return true; },
                   [](const Linear& l) { return l.lambda >= 0.0; },
                   [](const IntensityDependent& d) { return d.curve.valid(); },
                   [](const GammaMax& g) { return g.capital_lambda > 0.0; }},
        model);
}

std::optional<double> ImpactSpec::gamma_bound() const {
    return std::visit(
        overloaded{[](const NoImpact&) -> std::optional<double> {
                       return std::nullopt;
                   },
                   [](const Linear& l) -> std::optional<double> {
                       if (l.lambda > 0.0) return 1.0 / l.lambda;
                       return std::nullopt;
                   },
                   [](const IntensityDependent&) -> std::optional<double> {
                       return std::nullopt;
                   },
                   [](const GammaMax& g) -> std::optional<double> {
                       return g.capital_lambda;
                   }},
        model);
}

std::optional<double> mu_linear(double gamma_c, double lambda) {
    const double lg = lambda * gamma_c;
    if (lg >= 1.0) return std::nullopt;  // Singular
    return 1.0 / (1.0 - lg);
}

std::optional<double> solve_F_intensity(double gamma_c,
                                        const LambdaCurve& curve,
                                        double sigma, double f_max) {
    if (gamma_c == 0.0) return 0.0;

    // g(F) = 1/F + lambda(sigma F) - 1/gamma_c; the branch continuous with
    // mu(0) = 1 starts at F = gamma_c (where g = lambda >= 0) and moves away
    // from zero (gamma_c > 0) or toward zero (gamma_c < 0) to the first sign
    // change.
    const auto g = [&](double f) {
        return 1.0 / f + curve(sigma * f) - 1.0 / gamma_c;
    };

    double lo = gamma_c, hi;
    if (g(lo) == 0.0) return lo;

    if (gamma_c > 0.0) {
        hi = 2.0 * lo;
        while (g(hi) >= 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > f_max) return std::nullopt;  // NoFiniteRoot
        }
    } else {
        // F in [gamma_c, 0): 1/F -> -inf as F -> 0-, so a root exists.
        hi = gamma_c;
        double shrink = 0.5;
        while (g(hi * shrink) >= 0.0) {
            hi *= shrink;
            if (std::fabs(hi) < 1e-300) return std::nullopt;
        }
        lo = hi;
        hi *= shrink;
    }

    // Localize the first crossing inside [lo, hi], then bisect.
    const int kScan = 64;
    double glo = g(lo);
    for (int k = 1; k <= kScan; ++k) {
        const double f = lo + (hi - lo) * (double(k) / kScan);
        const double gf = g(f);
        if ((glo >= 0.0) != (gf >= 0.0)) {
            hi = f;
            break;
        }
        lo = f;
        glo = gf;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if ((g(mid) >= 0.0) == (glo >= 0.0)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (std::fabs(hi - lo) <= 1e-15 * std::fabs(mid)) break;
    }
    return 0.5 * (lo + hi);
}

double effective_F(double gamma_c, const EffectiveNonlinearity& nl) {
    const double cap = nl.cap();
    return std::visit(
        overloaded{
            [&](const ImpactSpec::NoImpact&) { return gamma_c; },
            [&](const ImpactSpec::Linear& l) {
                const double lg = l.lambda * gamma_c;
                return (lg < 1.0 - nl.cap_guard) ? gamma_c / (1.0 - lg) : cap;
            },
            [&](const ImpactSpec::IntensityDependent& d) {
                if (gamma_c == 0.0) return 0.0;
                const auto f =
                    solve_F_intensity(gamma_c, d.curve, nl.sigma, cap);
                return f ? *f : cap;
            },
            [&](const ImpactSpec::GammaMax& gm) {
                const double L = gm.capital_lambda;
                if (gamma_c <= -L) return -L;
                if (gamma_c <= L) return gamma_c;
                return cap;
            }},
        nl.impact.model);
}

std::optional<double> mu_of(double gamma_c, const EffectiveNonlinearity& nl) {
    if (gamma_c == 0.0) return 1.0;
    return std::visit(
        overloaded{
            [&](const ImpactSpec::NoImpact&) -> std::optional<double> {
                return 1.0;
            },
            [&](const ImpactSpec::Linear& l) -> std::optional<double> {
                const double lg = l.lambda * gamma_c;
                if (lg >= 1.0 - nl.cap_guard) return std::nullopt;  // Singular
                return 1.0 / (1.0 - lg);
            },
            [&](const ImpactSpec::IntensityDependent& d)
                -> std::optional<double> {
                const auto f =
                    solve_F_intensity(gamma_c, d.curve, nl.sigma, nl.cap());
                if (!f) return std::nullopt;
                return *f / gamma_c;
            },
            [&](const ImpactSpec::GammaMax& gm) -> std::optional<double> {
                const double L = gm.capital_lambda;
                if (gamma_c > L) return std::nullopt;  // mu = +inf branch
                if (gamma_c <= -L) return -L / gamma_c;
                return 1.0;
            }},
        nl.impact.model);
}

std::optional<double> supply_vol(double gamma_c,
                                 const EffectiveNonlinearity& nl) {
    const auto mu = mu_of(gamma_c, nl);
    if (!mu) return std::nullopt;
    return nl.sigma * std::sqrt(*mu);
}

LambdaCurve lambda_from_mu(
    const std::vector<std::pair<double, double>>& gamma_mu_samples,
    double sigma) {
    if (gamma_mu_samples.size() < 3)
        throw std::invalid_argument("lambda_from_mu: need at least 3 samples");

    auto samples = gamma_mu_samples;
    std::sort(samples.begin(), samples.end());

    double mu_at_zero = 1.0;
    double min_abs_gc = std::numeric_limits<double>::infinity();
    for (const auto& [gc, mu] : samples) {
        if (mu <= 0.0)
            throw std::invalid_argument("InvalidMu: mu <= 0 at a sample");
        if (std::fabs(gc) < min_abs_gc) {
            min_abs_gc = std::fabs(gc);
            mu_at_zero = mu;
        }
    }
    if (min_abs_gc > 1e-9 || std::fabs(mu_at_zero - 1.0) > 1e-6)
        throw std::invalid_argument("InvalidMu: mu(0) != 1");

    // lambda = (1 - 1/mu)/gamma_c at intensity I = sigma*gamma_c*mu;
    // the limit at gamma_c = 0 is the finite-difference slope of mu.
    std::vector<std::pair<double, double>> knots;  // (I, lambda)
    double lambda0_left = std::nan(""), lambda0_right = std::nan("");
    for (const auto& [gc, mu] : samples) {
        if (std::fabs(gc) <= 1e-9) continue;
        const double lam = (1.0 - 1.0 / mu) / gc;
        const double intensity = sigma * gc * mu;
        knots.emplace_back(intensity, std::max(lam, 0.0));
        if (gc < 0.0) lambda0_left = lam;
        if (gc > 0.0 && std::isnan(lambda0_right)) lambda0_right = lam;
    }
    // Differentiability check at 0: both one-sided slopes must exist and be
    // finite; lambda(0) is their continuous limit.
    double lambda0;
    if (!std::isnan(lambda0_left) && !std::isnan(lambda0_right)) {
        lambda0 = 0.5 * (lambda0_left + lambda0_right);
    } else if (!std::isnan(lambda0_right)) {
        lambda0 = lambda0_right;
    } else if (!std::isnan(lambda0_left)) {
        lambda0 = lambda0_left;
    } else {
        throw std::invalid_argument("InvalidMu: no nonzero gamma samples");
    }
    knots.emplace_back(0.0, std::max(lambda0, 0.0));

    std::sort(knots.begin(), knots.end());
    LambdaCurve::Table table;
    for (const auto& [intensity, lam] : knots) {
        if (!table.intensity.empty() &&
            intensity <= table.intensity.back() + 1e-14)
            continue;
        table.intensity.push_back(intensity);
        table.lambda.push_back(lam);
    }
    LambdaCurve curve;
    curve.form = std::move(table);
    return curve;
}

}  // namespace nlbs
