#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oeb/core.hpp"
#include "oeb/error.hpp"
#include "oeb/policies.hpp"
#include "oeb/reward_models.hpp"

namespace oeb {

enum class ModelKind { forest, ridge };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

struct ModelSpec {
    ModelKind kind = ModelKind::forest;
    ForestParams forest;
    double ridge_lambda = 1.0;
    double lda_shrinkage = 0.1;

    std::string canonical() const;
};

struct ExperimentConfig {
    std::size_t budget = 600;
    int delay = 1;
    double subsample_fraction = 0.8;
    int warm_start_periods = 2;
    std::vector<std::uint64_t> seeds = default_seeds(20);
    std::uint64_t master_seed = 0;
    ModelSpec model;
    bool weighted_fit = true;
    bool winsorize = true;
    Currency no_change_cutoff = kDefaultNoChangeCutoff;
    std::size_t jobs = 1;

    static std::vector<std::uint64_t> default_seeds(std::size_t n);
    void validate() const;
    // Canonical rendering of everything that affects results (not `jobs`).
    std::string canonical() const;
};

// Per-policy override of the config's weighted-fit flag.
struct PolicyRun {
    PolicySpec policy;
    std::optional<bool> weighted_fit;
};

struct ResultRow {
    std::uint64_t seed = 0;
    int year = 0;
    std::string policy;
    std::string params_digest;
    Currency reward_sum = 0.0;
    Currency estimate = 0.0;
    Currency true_mean = 0.0;
    double pct_diff = 0.0;
    double no_change_rate = 0.0;
    Currency avg_tpi = 0.0;
    std::size_t n_selected = 0;
    std::vector<std::size_t> class_hist;
    std::optional<Currency> eps_estimate;  // epsilon-greedy rows only
};

// One line per model-driven selection: what the training set contained.
struct AuditEntry {
    int period = 0;                  // period index of the selection
    std::size_t training_rows = 0;
    int latest_selection_period = -1;  // newest batch represented in training
    int latest_reveal_period = -1;     // newest pile represented in training
};

struct RunResult {
    std::string policy;
    std::string params_digest;
    std::uint64_t seed = 0;
    std::vector<ResultRow> rows;             // post-warm-start periods
    std::vector<ResultRow> warm_start_rows;  // random warm-start periods
    std::vector<AuditEntry> audit;
    std::vector<std::vector<ArmId>> selected_ids;  // per period, all periods

    Currency cumulative_reward() const;
};

struct PolicyAggregate {
    std::string policy;
    std::string params_digest;
    std::size_t seeds = 0;
    double r_mean = 0.0;
    double r_std = 0.0;
    double mu_pe = 0.0;
    double sigma_pe = 0.0;
    double rms_pe = 0.0;
    double mu_nr = 0.0;
    bool overlap_band = false;
};

struct PolicyFailure {
    std::string policy;
    ErrorCategory category = ErrorCategory::internal;
    std::string message;  // first failing seed, with period context
};

struct ExperimentResult {
    std::vector<RunResult> runs;  // by policy order, then seed order
    std::vector<PolicyAggregate> aggregates;
    std::vector<PolicyFailure> failures;
};

// Nearest-rank percentile: the smallest value v with at least pct% of the
// sample at or below it.
double nearest_rank_percentile(std::span<const double> values, double pct);

// Values above the upper percentile are set to it, then negatives to the floor.
std::vector<double> winsorize(std::span<const double> rewards, double upper_pct = 99.0, double lower_floor = 0.0);

// Uniform without-replacement subsample of floor(fraction * N) arms,
// determined by (master_seed, seed, year) alone.
PopulationYear subsample_population(const PopulationYear& full_year, double fraction, std::uint64_t seed,
                                    std::uint64_t master_seed = 0);

std::string params_digest(const ExperimentConfig& config, const PolicyRun& run);

RunResult run_seed(const std::vector<PopulationYear>& populations, const ExperimentConfig& config,
                   const PolicyRun& run, std::uint64_t seed);

ExperimentResult run_experiment(const std::vector<PopulationYear>& populations, const ExperimentConfig& config,
                                const std::vector<PolicyRun>& runs);

// Groups rows by (policy, digest) in first-seen order and applies the
// overlap marker after ordering by mean reward, descending.
std::vector<PolicyAggregate> aggregate_rows(const std::vector<ResultRow>& rows);
void mark_overlap_bands(std::vector<PolicyAggregate>& sorted_by_reward);

}  // namespace oeb
