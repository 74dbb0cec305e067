#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

// Market impact models and the effective nonlinearity F replacing the
// currency-gamma in the Black-Scholes diffusion term.
//
// Conventions: gamma_c = S^2 u_SS (currency units), lambda in inverse
// currency, mu = F(gamma_c)/gamma_c dimensionless with mu(0) = 1.

namespace nlbs {

struct LambdaCurve {
    struct Constant {
        double lambda0 = 0.0;
    };
    // lambda(I) = lambda0 * |I/scale|^p
    struct PowerLaw {
        double lambda0 = 0.0;
        double exponent = 1.0;
        double scale = 1.0;
    };
    // Piecewise-linear in intensity, constant extrapolation outside.
    struct Table {
        std::vector<double> intensity;  // strictly increasing
        std::vector<double> lambda;     // >= 0, same length
    };

    std::variant<Constant, PowerLaw, Table> form = Constant{};

    double operator()(double intensity) const;
    bool valid() const;
};

struct ImpactSpec {
    struct NoImpact {};
    struct Linear {
        double lambda = 0.0;  // >= 0
    };
    struct IntensityDependent {
        LambdaCurve curve;
    };
    struct GammaMax {
        double capital_lambda = 0.0;  // > 0, gamma-max in currency
    };

    std::variant<NoImpact, Linear, IntensityDependent, GammaMax> model =
        NoImpact{};

    bool valid() const;
    // Upper currency-gamma bound implied by the model (1/lambda or
    // capital Lambda), nullopt when unconstrained.
    std::optional<double> gamma_bound() const;
};

struct EffectiveNonlinearity {
    ImpactSpec impact;
    double sigma = 0.2;        // per sqrt(year)
    double epsilon = 1e-3;     // cap parameter; capped F evaluates to 1/epsilon
    double cap_guard = 1e-6;   // switch to the cap this far before the pole

    double cap() const { return 1.0 / epsilon; }
};

// mu = 1/(1 - lambda*gamma_c); nullopt (Singular) when lambda*gamma_c >= 1,
// where the geometric re-hedge series diverges.
std::optional<double> mu_linear(double gamma_c, double lambda);

// The effective diffusion F(gamma_c). Never fails: singular branches
// evaluate to the cap 1/epsilon, the GammaMax lower branch clamps at
// -capital_lambda.
double effective_F(double gamma_c, const EffectiveNonlinearity& nl);

// Root of 1/F + lambda(sigma*F) = 1/gamma_c with sign(F) = sign(gamma_c),
// smallest-|F| branch (continuous with mu(0) = 1). nullopt when no finite
// root exists below the cap bracket.
std::optional<double> solve_F_intensity(double gamma_c,
                                        const LambdaCurve& curve,
                                        double sigma,
                                        double f_max = 1e9);

// Amplification mu(gamma_c) = F(gamma_c)/gamma_c, mu(0) = 1.
// nullopt (Singular) when the underlying F has no finite value.
std::optional<double> mu_of(double gamma_c, const EffectiveNonlinearity& nl);

// Implied short-term volatility sigma*sqrt(mu(gamma_c)); the volatility
// supply curve. nullopt propagates Singular.
std::optional<double> supply_vol(double gamma_c,
                                 const EffectiveNonlinearity& nl);

// Tabulates lambda(I) at I = sigma*gamma_c*mu(gamma_c) from sampled
// (gamma_c, mu) pairs via lambda = (1 - 1/mu)/gamma_c. Throws
// std::invalid_argument (InvalidMu) when mu(0) != 1 or mu <= 0 at a sample.
LambdaCurve lambda_from_mu(const std::vector<std::pair<double, double>>&
                               gamma_mu_samples,
                           double sigma);

}  // namespace nlbs
