#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oeb/core.hpp"

namespace oeb {

// Knobs of the synthetic audit-like population. Rewards are zero-inflated:
// an arm is non-compliant with a probability driven by a non-linear latent
// risk score, and non-compliant arms draw a lognormal adjustment whose
// location and spread both grow with income (TPI).
struct SyntheticConfig {
    int num_years = 9;
    int first_year = 2006;
    int arms_per_year = 4000;
    int num_features = 50;
    int num_classes = 6;
    // Design weight per class; low-income classes carry the largest weights.
    std::vector<double> class_weight_levels = {40.0, 30.0, 20.0, 12.0, 6.0, 2.0};
    // Non-compliance probability = scale * sigmoid(intercept + risk score).
    double noncompliance_scale = 1.0;
    double noncompliance_intercept = -0.2;
    // log(adjustment) = base + tpi_elasticity * (log TPI - ref) + noise with
    // sd = log_sd_base + log_sd_tpi_slope * (log TPI - ref), floored at 0.3.
    double reward_log_base = 7.1;
    double reward_tpi_elasticity = 0.9;
    double reward_log_sd_base = 0.5;
    double reward_log_sd_tpi_slope = 0.1;
    // Per-year shift of covariate locations (0 = stationary).
    double drift_rate = 0.02;
    std::uint64_t seed = 0;

    void validate() const;
};

std::vector<PopulationYear> generate_synthetic(const SyntheticConfig& config);

// Reward driven by the sign of x0*x1 (an XOR pattern no linear model can
// rank) plus a weaker linear term in x2 and gaussian noise; other features
// are pure noise. Used for forest-vs-linear comparisons.
struct InteractionTaskConfig {
    int num_years = 2;
    int first_year = 2006;
    int arms_per_year = 3000;
    int num_features = 10;
    double interaction = 400.0;
    double linear = 100.0;
    double noise_sd = 150.0;
    std::uint64_t seed = 0;
};

std::vector<PopulationYear> generate_interaction_task(const InteractionTaskConfig& config);

struct CsvSchema {
    std::string id = "id";
    std::string year = "year";
    std::string weight = "weight";
    std::string reward = "reward";
    std::string tpi = "tpi";
    std::string stratum_class = "class";
};

// Long format, one row per arm, header required. Columns not named by the
// schema are features, in file order. Years are returned ascending.
std::vector<PopulationYear> load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
std::vector<PopulationYear> parse_csv(std::istream& in, const CsvSchema& schema = {},
                                      const std::string& source = "<stream>");

// Feature columns are written as x0..x{F-1} unless names are given.
void write_csv(std::ostream& out, const std::vector<PopulationYear>& populations, const CsvSchema& schema = {},
               const std::vector<std::string>& feature_names = {});
void write_csv(const std::filesystem::path& path, const std::vector<PopulationYear>& populations,
               const CsvSchema& schema = {}, const std::vector<std::string>& feature_names = {});

struct SummaryRow {
    int year = 0;
    std::size_t count = 0;
    double mean_unweighted = 0.0;
    double mean_weighted = 0.0;
    std::optional<double> drift;  // vs previous year; empty for the first
    double no_change_rate = 0.0;
    double total_weight = 0.0;
};

std::vector<SummaryRow> summary_stats(const std::vector<PopulationYear>& populations,
                                      Currency cutoff = kDefaultNoChangeCutoff);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace oeb
