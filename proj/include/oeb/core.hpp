#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oeb {

using Currency = double;

struct ArmId {
    std::int64_t value = 0;
    auto operator<=>(const ArmId&) const = default;
};

// One candidate for selection in one period. `true_reward` is hidden from
// policies until the batch containing the arm is revealed.
struct ArmRecord {
    ArmId id;
    std::vector<double> features;
    double weight = 1.0;
    Currency true_reward = 0.0;
    Currency tpi = 0.0;
    int stratum_class = 0;
    int year = 0;
};

// All arms offered in one period. Arms are kept sorted by id, so positional
// order and id order coincide; every tie rule in the library relies on this.
class PopulationYear {
public:
    PopulationYear() = default;

    // Validates weights, feature lengths, years and id uniqueness.
    PopulationYear(int year, std::vector<ArmRecord> arms);

    int year() const noexcept { return year_; }
    std::size_t size() const noexcept { return arms_.size(); }
    bool empty() const noexcept { return arms_.empty(); }
    double total_weight() const noexcept { return total_weight_; }
    std::size_t num_features() const noexcept { return arms_.empty() ? 0 : arms_.front().features.size(); }

    const std::vector<ArmRecord>& arms() const noexcept { return arms_; }
    const ArmRecord& operator[](std::size_t i) const { return arms_[i]; }

    std::vector<double> rewards() const;
    std::vector<double> weights() const;

    bool operator==(const PopulationYear&) const;

private:
    int year_ = 0;
    std::vector<ArmRecord> arms_;
    double total_weight_ = 0.0;
};

bool operator==(const ArmRecord& a, const ArmRecord& b);

// The K arms chosen for a period, as positions into the PopulationYear.
struct SelectionBatch {
    int year = 0;
    std::vector<std::size_t> selected;
    // Per-arm inclusion probability for randomized designs, indexed by
    // population position. Absent for deterministic policies.
    std::optional<std::vector<double>> inclusion_probs;
    // Subset of `selected` taken deterministically (probability exactly 1).
    std::vector<std::size_t> greedy_top;
    // Subset of `selected` picked uniformly at random by epsilon-greedy.
    std::vector<std::size_t> random_picks;

    std::size_t size() const noexcept { return selected.size(); }
};

// Throws if the batch breaks its invariants against `population_size`.
void validate_batch(const SelectionBatch& batch, std::size_t population_size, std::size_t budget);

struct RevealedOutcome {
    ArmId id;
    Currency true_reward = 0.0;
    double weight = 1.0;
    std::vector<double> features;
    int selection_year = 0;
};

// Rewards of one batch, delivered `delay` periods after selection.
struct RewardPile {
    int reveal_year = 0;
    std::vector<RevealedOutcome> outcomes;
};

RewardPile make_reward_pile(const PopulationYear& pop, const SelectionBatch& batch, int delay);

// Weighted mean of true rewards: the estimand for every estimator.
Currency weighted_population_mean(const PopulationYear& pop);
Currency weighted_mean(std::span<const double> values, std::span<const double> weights);

// Strictly below the cutoff counts as "no change".
constexpr bool is_no_change(Currency reward, Currency cutoff) noexcept { return reward < cutoff; }

inline constexpr Currency kDefaultNoChangeCutoff = 200.0;

}  // namespace oeb
