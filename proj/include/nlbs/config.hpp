#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlbs/grid.hpp"
#include "nlbs/impact.hpp"
#include "nlbs/payoff.hpp"

namespace nlbs {

enum class Command { Price, Facelift, Hedge, Converge, SupplyCurve };

struct HedgeBlock {
    double s0 = 100.0;
    std::size_t n_steps = 100;
    std::size_t n_paths = 10000;
    std::vector<std::size_t> steps_list;  // optional refinement levels
};

struct ConvergeBlock {
    double gamma_max = 50.0;
    std::vector<double> n_list = {1, 2, 4, 8};
};

struct SupplyCurveBlock {
    double gamma_lo = -100.0;
    double gamma_hi = 100.0;
    std::size_t n_samples = 200;
};

struct RunConfig {
    Command command = Command::Price;
    Payoff payoff;
    ImpactSpec impact;
    double sigma = 0.2;
    double maturity = 1.0;
    SpaceTimeGrid grid;
    bool facelift_first = true;
    std::optional<HedgeBlock> hedge;
    std::optional<ConvergeBlock> converge;
    std::optional<SupplyCurveBlock> supply_curve;
};

struct ValidationError {
    std::string key_path;
    std::string message;
};

// Full schema validation before any computation; unknown keys are rejected
// and all errors are reported at once.
struct ValidationResult {
    std::optional<RunConfig> config;
    std::vector<ValidationError> errors;
    bool ok() const { return config.has_value(); }
};

ValidationResult validate(const std::string& config_text);

enum class OutputFormat { Csv, Json, Both };

struct RunOptions {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    OutputFormat format = OutputFormat::Both;
    bool quiet = false;
};

// Dispatches a validated config to the engine modules and writes the
// artifact files. Returns 0 on success, 3 on numerical failure.
int run(const RunConfig& config, const RunOptions& options);

}  // namespace nlbs
