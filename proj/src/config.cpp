#include "nlbs/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nlbs/convergence.hpp"
#include "nlbs/facelift.hpp"
#include "nlbs/hedge.hpp"
#include "nlbs/json_io.hpp"
#include "nlbs/solver.hpp"
#include "nlbs/surface.hpp"

namespace nlbs {

namespace {

using nlohmann::json;

struct Validator {
    std::vector<ValidationError> errors;

    void fail(const std::string& path, const std::string& msg) {
        errors.push_back({path, msg});
    }

    void check_keys(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return;
        }
        for (const auto& [key, _] : j.items()) {
            bool known = false;
            for (const char* a : allowed)
                if (key == a) known = true;
            if (!known) fail(path + "." + key, "unknown key");
        }
    }

    template <typename T>
    std::optional<T> get(const json& j, const std::string& path,
                         const char* key, bool required) {
        if (!j.contains(key)) {
            if (required) fail(path + "." + key, "missing required key");
            return std::nullopt;
        }
        try {
            return j.at(key).get<T>();
        } catch (const json::exception& e) {
            fail(path + "." + key, e.what());
            return std::nullopt;
        }
    }
};

Payoff parse_payoff(Validator& v, const json& j) {
    const std::string path = "payoff";
    v.check_keys(j, path,
                 {"type", "strike", "k_low", "k_high", "breakpoints",
                  "left_slope", "right_slope", "position"});
    Payoff p;
    const auto type = v.get<std::string>(j, path, "type", true);
    if (!type) return p;
    if (*type == "call") {
        const auto k = v.get<double>(j, path, "strike", true);
        if (k && *k > 0.0)
            p = Payoff::call(*k);
        else if (k)
            v.fail(path + ".strike", "must be > 0");
    } else if (*type == "put") {
        const auto k = v.get<double>(j, path, "strike", true);
        if (k && *k > 0.0)
            p = Payoff::put(*k);
        else if (k)
            v.fail(path + ".strike", "must be > 0");
    } else if (*type == "call_spread") {
        const auto lo = v.get<double>(j, path, "k_low", true);
        const auto hi = v.get<double>(j, path, "k_high", true);
        if (lo && hi) {
            if (*lo > 0.0 && *hi > *lo)
                p = Payoff::call_spread(*lo, *hi);
            else
                v.fail(path, "need 0 < k_low < k_high");
        }
    } else if (*type == "custom") {
        try {
            p = payoff_from_json(j);
        } catch (const std::exception& e) {
            v.fail(path, e.what());
        }
        if (!p.valid()) v.fail(path + ".breakpoints", "invalid breakpoints");
    } else {
        v.fail(path + ".type", "unknown payoff type '" + *type + "'");
    }
    const auto pos = v.get<std::string>(j, path, "position", false);
    if (pos) {
        if (*pos == "short")
            p = p.scaled(-1.0);
        else if (*pos != "long")
            v.fail(path + ".position", "must be 'long' or 'short'");
    }
    return p;
}

ImpactSpec parse_impact(Validator& v, const json& j) {
    const std::string path = "impact";
    v.check_keys(j, path, {"type", "lambda", "curve", "capital_lambda"});
    ImpactSpec spec;
    const auto type = v.get<std::string>(j, path, "type", true);
    if (!type) return spec;
    try {
        spec = impact_from_json(j);
    } catch (const std::exception& e) {
        v.fail(path, e.what());
        return spec;
    }
    if (std::holds_alternative<ImpactSpec::Linear>(spec.model)) {
        if (std::get<ImpactSpec::Linear>(spec.model).lambda < 0.0)
            v.fail(path + ".lambda", "must be >= 0");
    }
    if (std::holds_alternative<ImpactSpec::GammaMax>(spec.model)) {
        if (!(std::get<ImpactSpec::GammaMax>(spec.model).capital_lambda > 0.0))
            v.fail(path + ".capital_lambda", "must be > 0");
    }
    if (std::holds_alternative<ImpactSpec::IntensityDependent>(spec.model)) {
        if (!std::get<ImpactSpec::IntensityDependent>(spec.model).curve.valid())
            v.fail(path + ".curve", "invalid lambda curve");
    }
    return spec;
}

SpaceTimeGrid parse_grid(Validator& v, const json& j) {
    const std::string path = "grid";
    v.check_keys(j, path,
                 {"s_min", "s_max", "n_space", "n_time", "epsilon", "n_itnl",
                  "nl_tol"});
    SpaceTimeGrid g;
    if (auto x = v.get<double>(j, path, "s_min", false)) g.s_min = *x;
    if (auto x = v.get<double>(j, path, "s_max", false)) g.s_max = *x;
    if (auto x = v.get<std::size_t>(j, path, "n_space", false)) g.n_space = *x;
    if (auto x = v.get<std::size_t>(j, path, "n_time", false)) g.n_time = *x;
    if (auto x = v.get<double>(j, path, "epsilon", false)) g.epsilon = *x;
    if (auto x = v.get<std::size_t>(j, path, "n_itnl", false)) g.n_itnl = *x;
    if (auto x = v.get<double>(j, path, "nl_tol", false)) g.nl_tol = *x;
    if (!g.valid()) v.fail(path, "invalid grid parameters");
    return g;
}

}  // namespace

ValidationResult validate(const std::string& config_text) {
    Validator v;
    json j;
    try {
        j = json::parse(config_text);
    } catch (const json::exception& e) {
        return {std::nullopt, {{"", std::string("parse error: ") + e.what()}}};
    }

    v.check_keys(j, "",
                 {"command", "payoff", "impact", "sigma", "maturity", "grid",
                  "facelift_first", "hedge", "converge", "supply_curve"});

    RunConfig cfg;
    const auto cmd = v.get<std::string>(j, "", "command", true);
    bool needs_payoff = true;
    if (cmd) {
        if (*cmd == "price")
            cfg.command = Command::Price;
        else if (*cmd == "facelift")
            cfg.command = Command::Facelift;
        else if (*cmd == "hedge")
            cfg.command = Command::Hedge;
        else if (*cmd == "converge")
            cfg.command = Command::Converge;
        else if (*cmd == "supply-curve") {
            cfg.command = Command::SupplyCurve;
            needs_payoff = false;
        } else
            v.fail("command", "unknown command '" + *cmd + "'");
    }

    if (j.contains("payoff"))
        cfg.payoff = parse_payoff(v, j.at("payoff"));
    else if (needs_payoff)
        v.fail("payoff", "missing required block");

    if (j.contains("impact"))
        cfg.impact = parse_impact(v, j.at("impact"));
    else
        v.fail("impact", "missing required block");

    if (auto s = v.get<double>(j, "", "sigma", false)) {
        if (*s < 0.0)
            v.fail("sigma", "must be >= 0");
        else
            cfg.sigma = *s;
    }
    if (auto t = v.get<double>(j, "", "maturity", false)) {
        if (*t <= 0.0)
            v.fail("maturity", "must be > 0");
        else
            cfg.maturity = *t;
    }
    if (j.contains("grid")) cfg.grid = parse_grid(v, j.at("grid"));
    if (auto f = v.get<bool>(j, "", "facelift_first", false))
        cfg.facelift_first = *f;

    if (j.contains("hedge")) {
        Validator& vv = v;
        const auto& h = j.at("hedge");
        vv.check_keys(h, "hedge", {"s0", "n_steps", "n_paths", "steps_list"});
        HedgeBlock hb;
        if (auto x = vv.get<double>(h, "hedge", "s0", false)) hb.s0 = *x;
        if (auto x = vv.get<std::size_t>(h, "hedge", "n_steps", false))
            hb.n_steps = *x;
        if (auto x = vv.get<std::size_t>(h, "hedge", "n_paths", false))
            hb.n_paths = *x;
        if (auto x = vv.get<std::vector<std::size_t>>(h, "hedge",
                                                      "steps_list", false))
            hb.steps_list = *x;
        if (hb.n_steps < 1) vv.fail("hedge.n_steps", "must be >= 1");
        if (hb.n_paths < 1) vv.fail("hedge.n_paths", "must be >= 1");
        cfg.hedge = hb;
    } else if (cmd && *cmd == "hedge") {
        v.fail("hedge", "missing required block");
    }

    if (j.contains("converge")) {
        const auto& c = j.at("converge");
        v.check_keys(c, "converge", {"gamma_max", "n_list"});
        ConvergeBlock cb;
        if (auto x = v.get<double>(c, "converge", "gamma_max", true))
            cb.gamma_max = *x;
        if (auto x = v.get<std::vector<double>>(c, "converge", "n_list", false))
            cb.n_list = *x;
        if (!(cb.gamma_max > 0.0))
            v.fail("converge.gamma_max", "must be > 0");
        cfg.converge = cb;
    } else if (cmd && *cmd == "converge") {
        v.fail("converge", "missing required block");
    }

    if (j.contains("supply_curve")) {
        const auto& s = j.at("supply_curve");
        v.check_keys(s, "supply_curve", {"gamma_lo", "gamma_hi", "n_samples"});
        SupplyCurveBlock sb;
        if (auto x = v.get<double>(s, "supply_curve", "gamma_lo", false))
            sb.gamma_lo = *x;
        if (auto x = v.get<double>(s, "supply_curve", "gamma_hi", false))
            sb.gamma_hi = *x;
        if (auto x = v.get<std::size_t>(s, "supply_curve", "n_samples", false))
            sb.n_samples = *x;
        if (sb.gamma_hi <= sb.gamma_lo)
            v.fail("supply_curve", "need gamma_lo < gamma_hi");
        cfg.supply_curve = sb;
    }

    if (!v.errors.empty()) return {std::nullopt, std::move(v.errors)};
    return {std::move(cfg), {}};
}

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

void write_surface(const PriceSurface& surf, const fs::path& dir,
                   const std::string& stem, OutputFormat fmt) {
    if (fmt == OutputFormat::Csv || fmt == OutputFormat::Both) {
        std::ofstream f(dir / (stem + ".csv"), std::ios::binary);
        export_csv(surf, f);
    }
    if (fmt == OutputFormat::Json || fmt == OutputFormat::Both)
        write_file(dir / (stem + ".json"), export_json(surf));
}

int run_price(const RunConfig& cfg, const RunOptions& opt) {
    const fs::path dir(opt.out_dir);
    const auto impacted = solve(cfg.payoff, cfg.impact, cfg.sigma,
                                cfg.maturity, cfg.grid, cfg.facelift_first);
    ImpactSpec none;
    const auto baseline =
        solve(cfg.payoff, none, cfg.sigma, cfg.maturity, cfg.grid, false);
    write_surface(impacted, dir, "surface", opt.format);
    write_surface(baseline, dir, "surface_lambda0", opt.format);

    // Plot-ready t=0 slice: S, impacted, impact-free.
    std::ofstream f(dir / "price_slice.dat", std::ios::binary);
    char buf[120];
    for (std::size_t j = 0; j < impacted.n_price(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.11e %.11e %.11e\n",
                      impacted.prices[j], impacted.value(0, j),
                      baseline.value(0, j));
        f << buf;
    }
    if (!opt.quiet)
        std::cout << "price: wrote surface files to " << dir.string() << "\n";
    return 0;
}

int run_facelift(const RunConfig& cfg, const RunOptions& opt) {
    const auto bound = cfg.impact.gamma_bound();
    if (!bound) {
        std::cerr << "facelift: impact model imposes no gamma bound\n";
        return 2;
    }
    const auto res = facelift(cfg.payoff, *bound, cfg.grid);
    const auto prices = cfg.grid.price_nodes();
    const fs::path dir(opt.out_dir);
    std::ofstream f(dir / "facelift.csv", std::ios::binary);
    f << "S,raw,lifted,active\n";
    char buf[160];
    for (std::size_t j = 0; j < prices.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.11e,%.11e,%.11e,%d\n", prices[j],
                      cfg.payoff(prices[j]), res.lifted_values[j],
                      res.active_set[j] ? 1 : 0);
        f << buf;
    }
    if (!opt.quiet)
        std::cout << "facelift: max violation " << res.max_violation << "\n";
    return 0;
}

int run_hedge(const RunConfig& cfg, const RunOptions& opt) {
    const auto surf = solve(cfg.payoff, cfg.impact, cfg.sigma, cfg.maturity,
                            cfg.grid, cfg.facelift_first);
    HedgeRunConfig hc;
    hc.surface = &surf;
    hc.impact = cfg.impact;
    hc.sigma = cfg.sigma;
    hc.s0 = cfg.hedge->s0;
    hc.n_steps = cfg.hedge->n_steps;
    hc.n_paths = cfg.hedge->n_paths;
    hc.seed = opt.seed;

    const fs::path dir(opt.out_dir);
    const auto report = simulate(hc);
    {
        std::ofstream f(dir / "hedge_report.csv", std::ios::binary);
        export_report_csv(report, f);
    }
    write_file(dir / "hedge_summary.json",
               export_report_summary_json(report));
    if (!cfg.hedge->steps_list.empty()) {
        const auto rows = refinement_study(hc, cfg.hedge->steps_list);
        std::ofstream f(dir / "hedge_refinement.csv", std::ios::binary);
        export_refinement_csv(rows, f);
    }
    if (!opt.quiet)
        std::cout << "hedge: rms error " << report.rms_error << " ("
                  << report.escaped << " escaped)\n";
    return 0;
}

int run_converge(const RunConfig& cfg, const RunOptions& opt) {
    const auto rows =
        convergence_study(cfg.payoff, cfg.sigma, cfg.converge->gamma_max,
                          cfg.converge->n_list, cfg.maturity, cfg.grid);
    std::ofstream f(fs::path(opt.out_dir) / "converge.csv", std::ios::binary);
    export_convergence_csv(rows, f);
    if (!opt.quiet)
        std::cout << "converge: " << rows.size() << " rows\n";
    return 0;
}

int run_supply_curve(const RunConfig& cfg, const RunOptions& opt) {
    SupplyCurveBlock sb = cfg.supply_curve.value_or(SupplyCurveBlock{});
    EffectiveNonlinearity nl{cfg.impact, cfg.sigma};
    std::ofstream f(fs::path(opt.out_dir) / "supply_curve.csv",
                    std::ios::binary);
    f << "gamma_c,supply_vol\n";
    char buf[80];
    for (std::size_t i = 0; i < sb.n_samples; ++i) {
        const double gc =
            sb.gamma_lo + (sb.gamma_hi - sb.gamma_lo) *
                              static_cast<double>(i) /
                              static_cast<double>(sb.n_samples - 1);
        const auto vol = supply_vol(gc, nl);
        if (!vol) continue;  // singular branch, no quote
        std::snprintf(buf, sizeof(buf), "%.11e,%.11e\n", gc, *vol);
        f << buf;
    }
    if (!opt.quiet) std::cout << "supply-curve: done\n";
    return 0;
}

}  // namespace

int run(const RunConfig& config, const RunOptions& options) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    try {
        switch (config.command) {
            case Command::Price:
                return run_price(config, options);
            case Command::Facelift:
                return run_facelift(config, options);
            case Command::Hedge:
                return run_hedge(config, options);
            case Command::Converge:
                return run_converge(config, options);
            case Command::SupplyCurve:
                return run_supply_curve(config, options);
        }
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace nlbs
