#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "oeb/abs_sampler.hpp"
#include "oeb/core.hpp"
#include "oeb/rng.hpp"

namespace oeb {

enum class PolicyKind { greedy, epsilon_greedy, ucb, random, lda_rank, abs };

std::string to_string(PolicyKind k);
PolicyKind parse_policy_kind(const std::string& s);

struct PolicySpec {
    PolicyKind kind = PolicyKind::greedy;
    std::string label;  // defaults to the kind name
    double epsilon = 0.1;
    double ucb_z = 1.0;
    // ABS; zeta is resolved from zeta_fraction against the budget.
    double alpha = 5.0;
    double zeta_fraction = 0.8;
    double trim = 0.025;
    std::size_t num_strata = 5;
    Smoothing smoothing = Smoothing::exponential;

    std::string name() const { return label.empty() ? to_string(kind) : label; }
    // Canonical "key=value;..." rendering of the parameters the kind uses.
    std::string canonical() const;
    AbsParams abs_params(std::size_t budget) const;
    void validate() const;
};

// Every selector returns exactly K distinct population positions. Ties
// between equal scores go to the lower position (= lower arm id).

SelectionBatch select_greedy(std::span<const double> predictions, std::size_t budget);
SelectionBatch select_epsilon_greedy(std::span<const double> predictions, std::size_t budget, double epsilon,
                                     RngStream& rng);
SelectionBatch select_ucb(std::span<const double> means, std::span<const double> dispersions, double z,
                          std::size_t budget);
SelectionBatch select_random(std::size_t population_size, std::size_t budget, RngStream& rng);
SelectionBatch select_lda_rank(std::span<const double> scores, std::size_t budget);
SelectionBatch select_abs(std::span<const double> predictions, const AbsParams& params, std::size_t budget,
                          RngStream& rng);

SelectionBatch to_batch(const AbsDraw& draw);

}  // namespace oeb
