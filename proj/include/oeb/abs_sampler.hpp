#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "oeb/rng.hpp"

namespace oeb {

// Adaptive bin sampling. The top `zeta` predictions are taken outright; the
// remaining m = K - zeta slots are filled by drawing m strata i.i.d. from a
// distribution pi over risk strata, then, for a stratum drawn l times,
// taking l distinct arms uniformly from it. Every arm's inclusion
// probability is known exactly, which is what makes the Horvitz-Thompson
// estimate unbiased.

enum class Smoothing { logistic, exponential };

std::string to_string(Smoothing s);
Smoothing parse_smoothing(const std::string& s);

struct AbsParams {
    double alpha = 1.0;
    std::size_t zeta = 0;
    std::size_t num_strata = 5;
    double trim = 0.0;  // floor on every pi_h
    Smoothing smoothing = Smoothing::logistic;
};

void validate(const AbsParams& params, std::size_t budget);

// Stratum indices are 0-based here; strata are ordered by mean.
struct Stratification {
    std::vector<std::size_t> assignment;  // item -> stratum
    std::vector<std::size_t> sizes;
    std::vector<double> means;
    std::vector<double> pi;  // empty until strata_distribution is applied

    std::size_t num_strata() const noexcept { return sizes.size(); }
    // Sum over strata of squared deviations from the stratum mean.
    double objective(std::span<const double> values) const;
};

// K-th largest value, counting duplicates.
double kth_largest(std::span<const double> values, std::size_t k);

// Rescale to [-5, 5], centre on the k-th largest rescaled value and apply a
// logistic of slope alpha. All-equal input yields 0.5 everywhere.
std::vector<double> smooth_logistic(std::span<const double> predictions, double alpha, std::size_t k);

// Rescale to [0, 1] and apply exp(alpha * r). All-equal input yields 1.
std::vector<double> smooth_exponential(std::span<const double> predictions, double alpha);

// 1-D clustering into `num_strata` contiguous intervals of the sorted values,
// each holding at least `min_size` items: constrained Lloyd descent from an
// equal-count split. `pi` is left empty.
Stratification stratify(std::span<const double> smoothed, std::size_t num_strata, std::size_t min_size);

// pi_h proportional to the stratum means, then strata below `trim` are raised
// to it and the excess is taken proportionally from the others.
std::vector<double> strata_distribution(const Stratification& strat, double trim);

// m * pi_h / N_h for every item. Requires `strat.pi`.
std::vector<double> inclusion_probabilities(const Stratification& strat, std::size_t m);

double joint_inclusion_probability(const Stratification& strat, std::size_t m, std::size_t a, std::size_t b);

// Analytic variance of the unit-weight HT estimator (1/N) sum r_a / p_a over
// the randomly drawn arms. `rewards` are indexed like `strat.assignment`
// (greedy-top arms excluded, they contribute no variance); `population_size`
// is N including them.
double ht_variance(std::span<const double> rewards, const Stratification& strat, std::size_t m,
                   std::size_t population_size);

// Everything about an ABS batch that does not depend on the random draw.
struct AbsPlan {
    std::size_t population_size = 0;
    std::size_t budget = 0;
    std::size_t m = 0;                        // K - zeta
    std::vector<std::size_t> greedy_top;      // population positions
    std::vector<std::size_t> remaining;       // population positions, ascending
    std::vector<double> smoothed;             // indexed like `remaining`
    Stratification strata;                    // indexed like `remaining`
    std::vector<std::vector<std::size_t>> members;  // population positions per stratum
    std::vector<double> inclusion_probs;      // per population position
};

struct AbsDraw {
    std::vector<std::size_t> greedy_top;
    std::vector<std::size_t> sampled;
    std::vector<double> inclusion_probs;
};

AbsPlan plan_abs(std::span<const double> predictions, const AbsParams& params, std::size_t budget);
AbsDraw draw_abs(const AbsPlan& plan, RngStream& rng);
AbsDraw select_abs_batch(std::span<const double> predictions, const AbsParams& params, std::size_t budget,
                         RngStream& rng);

// Analytic variance for a plan, with rewards given per population position.
double ht_variance(const AbsPlan& plan, std::span<const double> population_rewards);

}  // namespace oeb
