#include "oeb/estimators.hpp"

#include <algorithm>

#include "oeb/error.hpp"
#include "oeb/metrics.hpp"

namespace oeb {

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::model_based: return "model_based";
        case EstimatorKind::horvitz_thompson: return "horvitz_thompson";
        case EstimatorKind::epsilon_sample: return "epsilon_sample";
    }
    return "model_based";
}

EstimateRecord make_estimate_record(int year, EstimatorKind kind, Currency estimate, Currency true_mean) {
    return {year, kind, estimate, true_mean, percent_difference(estimate, true_mean)};
}

Currency model_based_estimate(std::span<const double> predictions, const PopulationYear& pop) {
    require(!pop.empty(), ErrorCategory::data, "model-based estimate over an empty population");
    require(predictions.size() == pop.size(), ErrorCategory::internal, "predictions do not cover the population");
    double s = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) s += pop[i].weight * predictions[i];
    return s / pop.total_weight();
}

namespace {

template <class Model>
Currency model_based_estimate_with(const Model& model, const PopulationYear& pop) {
    require(model.fitted(), ErrorCategory::model, "model-based estimate from an unfitted model");
    std::vector<double> pred(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) pred[i] = model.predict(pop[i].features);
    return model_based_estimate(pred, pop);
}

}  // namespace

Currency model_based_estimate(const ForestModel& model, const PopulationYear& pop) {
    return model_based_estimate_with(model, pop);
}

Currency model_based_estimate(const RidgeModel& model, const PopulationYear& pop) {
    return model_based_estimate_with(model, pop);
}

Currency ht_estimate(const SelectionBatch& batch, std::span<const double> rewards, std::span<const double> weights,
                     double total_weight) {
    require(total_weight > 0.0, ErrorCategory::internal, "HT estimate needs a positive total weight");
    require(rewards.size() == weights.size(), ErrorCategory::internal, "rewards and weights differ in length");
    std::vector<char> top(rewards.size(), 0);
    for (std::size_t i : batch.greedy_top) top[i] = 1;

    double s = 0.0;
    for (std::size_t i : batch.selected) {
        require(i < rewards.size(), ErrorCategory::internal, "selected arm outside the population");
        if (top[i]) {
            s += weights[i] * rewards[i];
            continue;
        }
        require(batch.inclusion_probs.has_value(), ErrorCategory::internal,
                "HT estimate needs inclusion probabilities for sampled arms");
        const double p = (*batch.inclusion_probs)[i];
        require(p > 0.0, ErrorCategory::internal, "sampled arm has zero inclusion probability");
        s += weights[i] * rewards[i] / p;
    }
    return s / total_weight;
}

Currency epsilon_sample_estimate(const SelectionBatch& batch, std::span<const double> rewards,
                                 std::span<const double> weights) {
    require(!batch.random_picks.empty(), ErrorCategory::data, "epsilon-sample estimate with an empty epsilon sample");
    double sw = 0.0, swr = 0.0;
    for (std::size_t i : batch.random_picks) {
        sw += weights[i];
        swr += weights[i] * rewards[i];
    }
    return swr / sw;
}

}  // namespace oeb
