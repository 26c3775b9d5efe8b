#include "oeb/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "oeb/error.hpp"

namespace oeb {

std::string_view category_name(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::config: return "config";
        case ErrorCategory::data: return "data";
        case ErrorCategory::io: return "io";
        case ErrorCategory::infeasible: return "infeasible";
        case ErrorCategory::model: return "model";
        case ErrorCategory::internal: return "internal";
    }
    return "internal";
}

bool operator==(const ArmRecord& a, const ArmRecord& b) {
    return a.id == b.id && a.features == b.features && a.weight == b.weight &&
           a.true_reward == b.true_reward && a.tpi == b.tpi && a.stratum_class == b.stratum_class &&
           a.year == b.year;
}

PopulationYear::PopulationYear(int year, std::vector<ArmRecord> arms) : year_(year), arms_(std::move(arms)) {
    std::sort(arms_.begin(), arms_.end(), [](const ArmRecord& a, const ArmRecord& b) { return a.id < b.id; });
    const std::size_t nf = num_features();
    for (std::size_t i = 0; i < arms_.size(); ++i) {
        const ArmRecord& a = arms_[i];
        if (i > 0 && arms_[i - 1].id == a.id)
            fail(ErrorCategory::data, "duplicate arm id " + std::to_string(a.id.value) + " in year " + std::to_string(year));
        if (a.year != year)
            fail(ErrorCategory::data, "arm " + std::to_string(a.id.value) + " has year " + std::to_string(a.year) +
                                          ", expected " + std::to_string(year));
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
            fail(ErrorCategory::data, "arm " + std::to_string(a.id.value) + " has non-positive weight");
        if (a.features.size() != nf)
            fail(ErrorCategory::data, "arm " + std::to_string(a.id.value) + " has " + std::to_string(a.features.size()) +
                                          " features, expected " + std::to_string(nf));
        total_weight_ += a.weight;
    }
}

std::vector<double> PopulationYear::rewards() const {
    std::vector<double> out(arms_.size());
    std::transform(arms_.begin(), arms_.end(), out.begin(), [](const ArmRecord& a) { return a.true_reward; });
    return out;
}

std::vector<double> PopulationYear::weights() const {
    std::vector<double> out(arms_.size());
    std::transform(arms_.begin(), arms_.end(), out.begin(), [](const ArmRecord& a) { return a.weight; });
    return out;
}

bool PopulationYear::operator==(const PopulationYear& o) const { return year_ == o.year_ && arms_ == o.arms_; }

void validate_batch(const SelectionBatch& batch, std::size_t population_size, std::size_t budget) {
    require(batch.selected.size() == budget, ErrorCategory::internal,
            "batch has " + std::to_string(batch.selected.size()) + " arms, budget is " + std::to_string(budget));
    std::vector<char> seen(population_size, 0);
    for (std::size_t i : batch.selected) {
        require(i < population_size, ErrorCategory::internal, "batch index out of range");
        require(!seen[i], ErrorCategory::internal, "batch contains a duplicate arm");
        seen[i] = 1;
    }
    for (std::size_t i : batch.greedy_top)
        require(i < population_size && seen[i], ErrorCategory::internal, "greedy-top arm not in batch");
    if (batch.inclusion_probs) {
        const auto& p = *batch.inclusion_probs;
        require(p.size() == population_size, ErrorCategory::internal, "inclusion probabilities do not cover the population");
        for (double q : p) require(q >= 0.0 && q <= 1.0 + 1e-12, ErrorCategory::internal, "inclusion probability outside [0,1]");
        for (std::size_t i : batch.selected)
            require(p[i] > 0.0, ErrorCategory::internal, "selected arm has zero inclusion probability");
    }
}

RewardPile make_reward_pile(const PopulationYear& pop, const SelectionBatch& batch, int delay) {
    RewardPile pile;
    pile.reveal_year = batch.year + delay;
    pile.outcomes.reserve(batch.selected.size());
    for (std::size_t i : batch.selected) {
        const ArmRecord& a = pop[i];
        pile.outcomes.push_back({a.id, a.true_reward, a.weight, a.features, batch.year});
    }
    return pile;
}

Currency weighted_mean(std::span<const double> values, std::span<const double> weights) {
    require(!values.empty(), ErrorCategory::data, "weighted mean of an empty set");
    require(values.size() == weights.size(), ErrorCategory::internal, "values and weights differ in length");
    double sw = 0.0, swv = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        swv += weights[i] * values[i];
    }
    return swv / sw;
}

Currency weighted_population_mean(const PopulationYear& pop) {
    require(!pop.empty(), ErrorCategory::data, "weighted mean of an empty population");
    double swv = 0.0;
    for (const ArmRecord& a : pop.arms()) swv += a.weight * a.true_reward;
    return swv / pop.total_weight();
}

}  // namespace oeb
