#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oeb/core.hpp"

namespace oeb {

// Values indexed by (seed, year) for one metric and one policy configuration.
class SeedYearMatrix {
public:
    SeedYearMatrix() = default;
    SeedYearMatrix(std::size_t seeds, std::size_t years, double fill = 0.0)
        : seeds_(seeds), years_(years), v_(seeds * years, fill) {}

    std::size_t seeds() const noexcept { return seeds_; }
    std::size_t years() const noexcept { return years_; }
    double& operator()(std::size_t seed, std::size_t year) { return v_[seed * years_ + year]; }
    double operator()(std::size_t seed, std::size_t year) const { return v_[seed * years_ + year]; }
    std::span<const double> values() const noexcept { return v_; }

private:
    std::size_t seeds_ = 0, years_ = 0;
    std::vector<double> v_;
};

struct PeStatistics {
    double mu_pe = 0.0;     // |mean of signed cells|
    double sigma_pe = 0.0;  // mean over years of the across-seed sample sd
    double rms_pe = 0.0;    // root mean square over all cells
};

double percent_difference(Currency estimate, Currency true_mean);
PeStatistics pe_statistics(const SeedYearMatrix& percent_differences);

double no_change_rate(std::span<const double> rewards, Currency cutoff = kDefaultNoChangeCutoff);

// Positions sorted by descending score, ties to the lower position.
std::vector<std::size_t> ranking_from_scores(std::span<const double> scores);

// Area under the cumulative weighted-reward curve of an ordering (best
// first): sum over prefixes of the prefix sum of w*r.
double ranked_reward_area(std::span<const std::size_t> order, std::span<const double> rewards,
                          std::span<const double> weights);

// (xi - xi_min) / (xi_max - xi_min), with the extremes taken over orderings
// by weighted reward w*r.
double rare_score(std::span<const std::size_t> predicted_order, std::span<const double> rewards,
                  std::span<const double> weights);

// Mean over covariates of the non-intersection distance 1 - sum min(P_i, Q_i)
// between equal-width histograms spanning the pooled range of both samples.
using FeatureRows = std::vector<std::vector<double>>;
double covariate_drift(const FeatureRows& year_a, const FeatureRows& year_b, std::size_t num_bins = 20);
double covariate_drift(const PopulationYear& year_a, const PopulationYear& year_b, std::size_t num_bins = 20);

Currency cumulative_reward(std::span<const double> per_year_batch_rewards);
Currency cumulative_avg_tpi(const std::vector<std::vector<double>>& per_year_selected_tpi);

// Small statistics helpers shared by the harness and the test suites.
double mean(std::span<const double> v);
double sample_sd(std::span<const double> v);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace oeb
