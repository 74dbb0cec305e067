#include "nlbs/hedge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>

#include <json.hpp>

namespace nlbs {

namespace {

// Stateless counter-based uniform stream: two finalizer rounds of the
// splitmix64 mixer over (seed, path, counter).
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t path, std::uint64_t ctr) {
    std::uint64_t z = seed + path * 0x9e3779b97f4a7c15ull +
                      ctr * 0xd1b54a32d192ed03ull;
    z = mix64(mix64(z));
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller; one normal per step keeps the substream layout simple.
double gaussian(std::uint64_t seed, std::uint64_t path, std::uint64_t ctr) {
    const double u1 = uniform01(seed, path, 2 * ctr);
    const double u2 = uniform01(seed, path, 2 * ctr + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t worker_count(std::size_t n_paths) {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("NLBS_THREADS")) {
        const long v = std::atol(env);
        if (v > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
    }
    return std::max<std::size_t>(1, std::min(n, n_paths));
}

// Simulates one path given its Brownian increments (sqrt(dt)*Z per step).
PathRecord run_path(const HedgeRunConfig& cfg,
                    const EffectiveNonlinearity& nl, double u0, double dt,
                    const std::vector<double>& db) {
    const auto& surf = *cfg.surface;
    const double maturity = surf.times.back();
    const double s_min = surf.prices.front();
    const double s_max = surf.prices.back();

    PathRecord rec;
    double s_tilde = cfg.s0;
    double s_plain = cfg.s0;
    double delta_term = 0.0, impact_term = 0.0;
    for (std::size_t i = 0; i < db.size(); ++i) {
        if (s_tilde < s_min || s_tilde > s_max) {
            rec.escaped = true;
            break;
        }
        const double t = dt * static_cast<double>(i);
        const double gc = surf.interp_gamma_c(t, s_tilde);
        const double delta = surf.interp_delta(t, s_tilde);
        const auto mu = mu_of(gc, nl);
        if (!mu)
            throw SingularMu("hedge: mu evaluation failed at t=" +
                             std::to_string(t) +
                             " S=" + std::to_string(s_tilde));
        const double vol = nl.sigma * *mu;
        const double s_next =
            s_tilde * std::exp(vol * db[i] - 0.5 * vol * vol * dt);
        delta_term += delta * (s_next - s_tilde);
        impact_term +=
            0.5 * gc * nl.sigma * nl.sigma * (*mu * *mu - *mu) * dt;
        s_tilde = s_next;
        s_plain *= std::exp(nl.sigma * db[i] -
                            0.5 * nl.sigma * nl.sigma * dt);
    }
    rec.s_tilde_T = s_tilde;
    rec.s_plain_T = s_plain;
    rec.delta_term = delta_term;
    rec.impact_term = impact_term;
    if (!rec.escaped) {
        const double phi = surf.interp_value(maturity, s_tilde);
        rec.error = u0 + delta_term + impact_term - phi;
    }
    return rec;
}

// Shared-increment driver: fine_per_step fine increments are summed into
// each coarse step, so all refinement levels see the same Brownian path.
HedgeRunReport run_all(const HedgeRunConfig& cfg, std::size_t n_steps,
                       std::size_t n_fine) {
    if (!cfg.surface) throw std::invalid_argument("hedge: missing surface");
    if (cfg.n_steps < 1 || cfg.n_paths < 1)
        throw std::invalid_argument("hedge: n_steps and n_paths must be >= 1");
    const auto& surf = *cfg.surface;
    if (cfg.s0 <= surf.prices.front() || cfg.s0 >= surf.prices.back())
        throw std::invalid_argument("hedge: s0 outside the surface interior");

    const double maturity = surf.times.back();
    const double dt = maturity / static_cast<double>(n_steps);
    const double dt_fine = maturity / static_cast<double>(n_fine);
    const std::size_t group = n_fine / n_steps;

    HedgeRunReport report;
    report.u0 = surf.interp_value(0.0, cfg.s0);
    report.paths.resize(cfg.n_paths);

    EffectiveNonlinearity nl{cfg.impact, cfg.sigma};

    const std::size_t workers = worker_count(cfg.n_paths);
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&](std::size_t w) {
        std::vector<double> db(n_steps);
        const double sqrt_dt_fine = std::sqrt(dt_fine);
        for (std::size_t p = w; p < cfg.n_paths; p += workers) {
            try {
                for (std::size_t i = 0; i < n_steps; ++i) {
                    double sum = 0.0;
                    for (std::size_t k = 0; k < group; ++k)
                        sum += sqrt_dt_fine *
                               gaussian(cfg.seed, p, i * group + k);
                    db[i] = sum;
                }
                report.paths[p] = run_path(cfg, nl, report.u0, dt, db);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        body(0);
    } else {
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(body, w);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Sequential compensated aggregation in path order, so the result is
    // independent of which worker produced each record.
    double sum = 0.0, sum_c = 0.0, sum2 = 0.0, sum2_c = 0.0;
    std::size_t used = 0;
    for (const auto& rec : report.paths) {
        if (rec.escaped) {
            ++report.escaped;
            continue;
        }
        ++used;
        double y = rec.error - sum_c;
        double t = sum + y;
        sum_c = (t - sum) - y;
        sum = t;
        y = rec.error * rec.error - sum2_c;
        t = sum2 + y;
        sum2_c = (t - sum2) - y;
        sum2 = t;
        report.max_abs_error =
            std::max(report.max_abs_error, std::fabs(rec.error));
    }
    if (used > 0) {
        report.mean_error = sum / static_cast<double>(used);
        report.rms_error = std::sqrt(sum2 / static_cast<double>(used));
    }
    return report;
}

}  // namespace

HedgeRunReport simulate(const HedgeRunConfig& config) {
    return run_all(config, config.n_steps, config.n_steps);
}

std::vector<RefinementRow> refinement_study(
    const HedgeRunConfig& config, const std::vector<std::size_t>& steps_list) {
    if (steps_list.empty())
        throw std::invalid_argument("refinement_study: empty steps list");
    for (std::size_t i = 1; i < steps_list.size(); ++i)
        if (steps_list[i] <= steps_list[i - 1])
            throw std::invalid_argument(
                "refinement_study: steps list must be increasing");
    const std::size_t finest = steps_list.back();
    std::vector<RefinementRow> rows;
    for (std::size_t n : steps_list) {
        if (finest % n != 0)
            throw std::invalid_argument(
                "refinement_study: every level must divide the finest");
        const auto rep = run_all(config, n, finest);
        rows.push_back({n, rep.rms_error, rep.mean_error, rep.escaped});
    }
    return rows;
}

void export_report_csv(const HedgeRunReport& report, std::ostream& os) {
    os << "path_id,S_T,delta_term,impact_term,error\n";
    char buf[160];
    for (std::size_t p = 0; p < report.paths.size(); ++p) {
        const auto& r = report.paths[p];
        std::snprintf(buf, sizeof(buf), "%zu,%.11e,%.11e,%.11e,%.11e\n", p,
                      r.s_tilde_T, r.delta_term, r.impact_term, r.error);
        os << buf;
    }
}

std::string export_report_summary_json(const HedgeRunReport& report) {
    nlohmann::json j;
    j["u0"] = report.u0;
    j["n_paths"] = report.paths.size();
    j["escaped"] = report.escaped;
    j["mean_error"] = report.mean_error;
    j["rms_error"] = report.rms_error;
    j["max_abs_error"] = report.max_abs_error;
    return j.dump(2);
}

void export_refinement_csv(const std::vector<RefinementRow>& rows,
                           std::ostream& os) {
    os << "n_steps,rms_error,mean_error,escaped\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.11e,%.11e,%zu\n", r.n_steps,
                      r.rms_error, r.mean_error, r.escaped);
        os << buf;
    }
}

}  // namespace nlbs
