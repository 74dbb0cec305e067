#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlbs/impact.hpp"
#include "nlbs/surface.hpp"

namespace nlbs {

struct HedgeRunConfig {
    const PriceSurface* surface = nullptr;
    ImpactSpec impact;
    double sigma = 0.2;
    double s0 = 100.0;
    std::size_t n_steps = 100;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
};

// One path's contribution to the replication identity
// u(0,S0) + int delta dS~ + 1/2 int Gamma_c sigma^2 (mu^2 - mu) dt = Phi(S~_T).
struct PathRecord {
    double s_tilde_T = 0.0;
    double s_plain_T = 0.0;    // same noise, no impact feedback
    double delta_term = 0.0;
    double impact_term = 0.0;  // always >= 0 (in favour of the seller)
    double error = 0.0;        // u0 + delta_term + impact_term - Phi(S~_T)
    bool escaped = false;
};

struct HedgeRunReport {
    double u0 = 0.0;
    std::vector<PathRecord> paths;
    std::size_t escaped = 0;
    double mean_error = 0.0;
    double rms_error = 0.0;
    double max_abs_error = 0.0;
};

struct SingularMu : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Euler-Maruyama on ln S~ with per-step volatility sigma*mu(Gamma_c), greeks
// read off the surface by bilinear interpolation in (t, ln S), left-point
// integrals. Deterministic for a fixed seed regardless of worker count.
HedgeRunReport simulate(const HedgeRunConfig& config);

struct RefinementRow {
    std::size_t n_steps = 0;
    double rms_error = 0.0;
    double mean_error = 0.0;
    std::size_t escaped = 0;
};

// Re-runs the simulation at each step count with shared Brownian increments:
// coarse increments are partial sums of the finest level, so the levels are
// variance-matched. Every entry must divide the last (finest) entry.
std::vector<RefinementRow> refinement_study(
    const HedgeRunConfig& config, const std::vector<std::size_t>& steps_list);

// CSV exports: "path_id,S_T,delta_term,impact_term,error" and
// "n_steps,rms_error,mean_error,escaped".
void export_report_csv(const HedgeRunReport& report, std::ostream& os);
std::string export_report_summary_json(const HedgeRunReport& report);
void export_refinement_csv(const std::vector<RefinementRow>& rows,
                           std::ostream& os);

}  // namespace nlbs
