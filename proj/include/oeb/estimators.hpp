#pragma once

#include <span>
#include <string>

#include "oeb/core.hpp"
#include "oeb/reward_models.hpp"

namespace oeb {

enum class EstimatorKind { model_based, horvitz_thompson, epsilon_sample };

std::string to_string(EstimatorKind k);

struct EstimateRecord {
    int year = 0;
    EstimatorKind kind = EstimatorKind::model_based;
    Currency estimate = 0.0;
    Currency true_mean = 0.0;
    double percent_difference = 0.0;
};

EstimateRecord make_estimate_record(int year, EstimatorKind kind, Currency estimate, Currency true_mean);

// Weighted mean of per-arm predictions over the whole period population.
Currency model_based_estimate(std::span<const double> predictions, const PopulationYear& pop);
Currency model_based_estimate(const ForestModel& model, const PopulationYear& pop);
Currency model_based_estimate(const RidgeModel& model, const PopulationYear& pop);

// (1 / total_weight) * (sum over randomly drawn arms of w r / p + sum over
// greedy-top arms of w r). `rewards` and `weights` are per population
// position; only selected positions are read.
Currency ht_estimate(const SelectionBatch& batch, std::span<const double> rewards, std::span<const double> weights,
                     double total_weight);

// Weighted mean of revealed rewards over the uniformly drawn epsilon picks.
Currency epsilon_sample_estimate(const SelectionBatch& batch, std::span<const double> rewards,
                                 std::span<const double> weights);

}  // namespace oeb
