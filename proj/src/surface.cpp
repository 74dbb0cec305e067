#include "nlbs/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nlbs/json_io.hpp"
#include "nlbs/simd_kernels.hpp"

namespace nlbs {

double PriceSurface::interp(const std::vector<double>& field, double t,
                            double s) const {
    if (s < prices.front() || s > prices.back())
        throw std::out_of_range("PriceSurface::interp: price outside grid");
    t = std::clamp(t, times.front(), times.back());

    const auto ti = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i1 = static_cast<std::size_t>(
        std::distance(times.begin(), ti));
    i1 = std::clamp<std::size_t>(i1, 1, times.size() - 1);
    const std::size_t i0 = i1 - 1;
    const double wt = (t - times[i0]) / (times[i1] - times[i0]);

    const double x = std::log(s);
    const double x0 = std::log(prices.front());
    const double h =
        (std::log(prices.back()) - x0) / static_cast<double>(prices.size() - 1);
    std::size_t j0 = static_cast<std::size_t>(std::floor((x - x0) / h));
    j0 = std::min(j0, prices.size() - 2);
    const double ws = (x - (x0 + h * static_cast<double>(j0))) / h;

    const auto at = [&](std::size_t i, std::size_t j) {
        return field[idx(i, j)];
    };
    const double lo = at(i0, j0) * (1.0 - ws) + at(i0, j0 + 1) * ws;
    const double hi = at(i1, j0) * (1.0 - ws) + at(i1, j0 + 1) * ws;
    return lo * (1.0 - wt) + hi * wt;
}

void greeks_row(std::span<const double> u, std::span<const double> prices,
                double dx, std::span<double> delta_out,
                std::span<double> gamma_c_out) {
    const std::size_t n = u.size();
    const double inv_h2 = 1.0 / (dx * dx);
    const double inv_2h = 1.0 / (2.0 * dx);

    const auto& k = simd::active_kernels();
    k.gamma_stencil(u.data(), n, inv_h2, inv_2h, gamma_c_out.data());
    for (std::size_t j = 1; j + 1 < n; ++j)
        delta_out[j] = (u[j + 1] - u[j - 1]) * inv_2h / prices[j];

    // One-sided first differences at the boundaries; second derivative
    // taken as zero there (far-field linearity).
    delta_out[0] = (u[1] - u[0]) / dx / prices[0];
    delta_out[n - 1] = (u[n - 1] - u[n - 2]) / dx / prices[n - 1];
    gamma_c_out[0] = 0.0;
    gamma_c_out[n - 1] = 0.0;
}

void compute_greeks(PriceSurface& surface) {
    const std::size_t np = surface.n_price();
    const double dx = (std::log(surface.prices.back()) -
                       std::log(surface.prices.front())) /
                      static_cast<double>(np - 1);
    surface.delta.resize(surface.values.size());
    surface.gamma_c.resize(surface.values.size());
    for (std::size_t i = 0; i < surface.n_time(); ++i) {
        const std::size_t off = i * np;
        greeks_row({surface.values.data() + off, np}, surface.prices, dx,
                   {surface.delta.data() + off, np},
                   {surface.gamma_c.data() + off, np});
    }
}

double pde_residual(const PriceSurface& surface, const ImpactSpec& impact,
                    double sigma, double epsilon) {
    if (surface.n_time() < 3)
        throw std::invalid_argument("pde_residual: need >= 3 time levels");
    EffectiveNonlinearity nl{impact, sigma, epsilon};
    const double cap = nl.cap();
    const std::size_t np = surface.n_price();

    double worst = 0.0;
    for (std::size_t i = 1; i < surface.n_time(); ++i) {
        const double dt = surface.times[i] - surface.times[i - 1];
        for (std::size_t j = 1; j + 1 < np; ++j) {
            const double gc = surface.gamma_c[surface.idx(i - 1, j)];
            const double f = effective_F(gc, nl);
            if (f == cap) continue;  // cap branch excluded by contract
            const double dtu = (surface.value(i, j) - surface.value(i - 1, j)) / dt;
            worst = std::max(worst, std::fabs(dtu + 0.5 * sigma * sigma * f));
        }
    }
    return worst;
}

void export_csv(const PriceSurface& surface, std::ostream& os) {
    os << "t,S,u,delta,gamma_c\n";
    char buf[160];
    for (std::size_t i = 0; i < surface.n_time(); ++i) {
        for (std::size_t j = 0; j < surface.n_price(); ++j) {
            const std::size_t k = surface.idx(i, j);
            std::snprintf(buf, sizeof(buf),
                          "%.11e,%.11e,%.11e,%.11e,%.11e\n", surface.times[i],
                          surface.prices[j], surface.values[k],
                          surface.delta[k], surface.gamma_c[k]);
            os << buf;
        }
    }
}

PriceSurface import_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,S,u", 0) != 0)
        throw std::runtime_error("import_csv: bad header");
    PriceSurface s;
    std::vector<double> ts, ss;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double t, sp, u, d, g;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &sp, &u, &d,
                        &g) != 5)
            throw std::runtime_error("import_csv: bad row: " + line);
        ts.push_back(t);
        ss.push_back(sp);
        s.values.push_back(u);
        s.delta.push_back(d);
        s.gamma_c.push_back(g);
    }
    if (ts.empty()) throw std::runtime_error("import_csv: no rows");
    // Time-major: the price axis repeats within each time block.
    std::size_t np = 1;
    while (np < ts.size() && ts[np] == ts[0]) ++np;
    if (ts.size() % np != 0)
        throw std::runtime_error("import_csv: ragged surface");
    for (std::size_t j = 0; j < np; ++j) s.prices.push_back(ss[j]);
    for (std::size_t i = 0; i < ts.size(); i += np) s.times.push_back(ts[i]);
    return s;
}

std::string export_json(const PriceSurface& surface) {
    nlohmann::json j;
    j["times"] = surface.times;
    j["prices"] = surface.prices;
    j["values"] = surface.values;
    j["delta"] = surface.delta;
    j["gamma_c"] = surface.gamma_c;
    j["metadata"] = {{"impact", impact_to_json(surface.meta.impact)},
                     {"sigma", surface.meta.sigma},
                     {"payoff_hash", surface.meta.payoff_hash}};
    return j.dump(2);
}

PriceSurface import_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PriceSurface s;
    s.times = j.at("times").get<std::vector<double>>();
    s.prices = j.at("prices").get<std::vector<double>>();
    s.values = j.at("values").get<std::vector<double>>();
    s.delta = j.at("delta").get<std::vector<double>>();
    s.gamma_c = j.at("gamma_c").get<std::vector<double>>();
    if (j.contains("metadata")) {
        const auto& m = j.at("metadata");
        s.meta.impact = impact_from_json(m.at("impact"));
        s.meta.sigma = m.at("sigma").get<double>();
        s.meta.payoff_hash = m.at("payoff_hash").get<std::uint64_t>();
    }
    if (s.values.size() != s.times.size() * s.prices.size())
        throw std::runtime_error("import_json: inconsistent surface shape");
    return s;
}

nlohmann::json curve_to_json(const LambdaCurve& curve) {
    nlohmann::json j;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, LambdaCurve::Constant>) {
                j = {{"form", "constant"}, {"lambda0", c.lambda0}};
            } else if constexpr (std::is_same_v<T, LambdaCurve::PowerLaw>) {
                j = {{"form", "power_law"},
                     {"lambda0", c.lambda0},
                     {"exponent", c.exponent},
                     {"scale", c.scale}};
            } else {
                j = {{"form", "table"},
                     {"intensity", c.intensity},
                     {"lambda", c.lambda}};
            }
        },
        curve.form);
    return j;
}

LambdaCurve curve_from_json(const nlohmann::json& j) {
    LambdaCurve curve;
    const auto form = j.at("form").get<std::string>();
    if (form == "constant") {
        curve.form = LambdaCurve::Constant{j.at("lambda0").get<double>()};
    } else if (form == "power_law") {
        curve.form = LambdaCurve::PowerLaw{
            j.at("lambda0").get<double>(), j.at("exponent").get<double>(),
            j.value("scale", 1.0)};
    } else if (form == "table") {
        curve.form = LambdaCurve::Table{
            j.at("intensity").get<std::vector<double>>(),
            j.at("lambda").get<std::vector<double>>()};
    } else {
        throw std::runtime_error("unknown lambda curve form: " + form);
    }
    return curve;
}

nlohmann::json impact_to_json(const ImpactSpec& spec) {
    nlohmann::json j;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ImpactSpec::NoImpact>) {
                j = {{"type", "none"}};
            } else if constexpr (std::is_same_v<T, ImpactSpec::Linear>) {
                j = {{"type", "linear"}, {"lambda", m.lambda}};
            } else if constexpr (std::is_same_v<T,
                                                ImpactSpec::IntensityDependent>) {
                j = {{"type", "intensity"}, {"curve", curve_to_json(m.curve)}};
            } else {
                j = {{"type", "gamma_max"},
                     {"capital_lambda", m.capital_lambda}};
            }
        },
        spec.model);
    return j;
}

ImpactSpec impact_from_json(const nlohmann::json& j) {
    ImpactSpec spec;
    const auto type = j.at("type").get<std::string>();
    if (type == "none") {
        spec.model = ImpactSpec::NoImpact{};
    } else if (type == "linear") {
        spec.model = ImpactSpec::Linear{j.at("lambda").get<double>()};
    } else if (type == "intensity") {
        spec.model =
            ImpactSpec::IntensityDependent{curve_from_json(j.at("curve"))};
    } else if (type == "gamma_max") {
        spec.model =
            ImpactSpec::GammaMax{j.at("capital_lambda").get<double>()};
    } else {
        throw std::runtime_error("unknown impact type: " + type);
    }
    return spec;
}

nlohmann::json payoff_to_json(const Payoff& payoff) {
    nlohmann::json bps = nlohmann::json::array();
    for (const auto& b : payoff.breakpoints)
        bps.push_back({{"price", b.price}, {"value", b.value}});
    return {{"breakpoints", bps},
            {"left_slope", payoff.left_slope},
            {"right_slope", payoff.right_slope}};
}

Payoff payoff_from_json(const nlohmann::json& j) {
    Payoff p;
    for (const auto& b : j.at("breakpoints"))
        p.breakpoints.push_back(
            {b.at("price").get<double>(), b.at("value").get<double>()});
    p.left_slope = j.at("left_slope").get<double>();
    p.right_slope = j.at("right_slope").get<double>();
    return p;
}

}  // namespace nlbs
