#include "oeb/policies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "oeb/error.hpp"

namespace oeb {

std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::greedy: return "greedy";
        case PolicyKind::epsilon_greedy: return "epsilon_greedy";
        case PolicyKind::ucb: return "ucb";
        case PolicyKind::random: return "random";
        case PolicyKind::lda_rank: return "lda_rank";
        case PolicyKind::abs: return "abs";
    }
    return "greedy";
}

PolicyKind parse_policy_kind(const std::string& s) {
    for (PolicyKind k : {PolicyKind::greedy, PolicyKind::epsilon_greedy, PolicyKind::ucb, PolicyKind::random,
                         PolicyKind::lda_rank, PolicyKind::abs})
        if (s == to_string(k)) return k;
    if (s == "eps" || s == "epsilon-greedy") return PolicyKind::epsilon_greedy;
    if (s == "lda") return PolicyKind::lda_rank;
    fail(ErrorCategory::config, "unknown policy '" + s + "'");
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void check_budget(std::size_t budget, std::size_t n) {
    require(budget <= n, ErrorCategory::infeasible,
            "budget " + std::to_string(budget) + " exceeds population size " + std::to_string(n));
}

// Positions of the K largest scores, ties to the lower position.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    order.resize(k);
    return order;
}

}  // namespace

std::string PolicySpec::canonical() const {
    std::string s = "kind=" + to_string(kind);
    switch (kind) {
        case PolicyKind::epsilon_greedy: s += ";epsilon=" + num(epsilon); break;
        case PolicyKind::ucb: s += ";z=" + num(ucb_z); break;
        case PolicyKind::abs:
            s += ";alpha=" + num(alpha) + ";zeta_frac=" + num(zeta_fraction) + ";trim=" + num(trim) +
                 ";strata=" + std::to_string(num_strata) + ";smoothing=" + to_string(smoothing);
            break;
        default: break;
    }
    return s;
}

AbsParams PolicySpec::abs_params(std::size_t budget) const {
    AbsParams p;
    p.alpha = alpha;
    p.zeta = static_cast<std::size_t>(std::llround(zeta_fraction * static_cast<double>(budget)));
    p.num_strata = num_strata;
    p.trim = trim;
    p.smoothing = smoothing;
    return p;
}

void PolicySpec::validate() const {
    require(epsilon >= 0.0 && epsilon <= 1.0, ErrorCategory::config, "epsilon must be in [0, 1]");
    require(ucb_z >= 0.0, ErrorCategory::config, "UCB Z must be >= 0");
    require(zeta_fraction >= 0.0 && zeta_fraction <= 1.0, ErrorCategory::config, "zeta fraction must be in [0, 1]");
    if (kind == PolicyKind::abs) oeb::validate(abs_params(1000), 1000);
}

SelectionBatch select_greedy(std::span<const double> predictions, std::size_t budget) {
    check_budget(budget, predictions.size());
    SelectionBatch b;
    b.selected = top_k(predictions, budget);
    return b;
}

// K sequential picks without replacement; each pick is uniform over the
// remaining arms with probability epsilon, else the best remaining arm.
SelectionBatch select_epsilon_greedy(std::span<const double> predictions, std::size_t budget, double epsilon,
                                     RngStream& rng) {
    require(epsilon >= 0.0 && epsilon <= 1.0, ErrorCategory::config, "epsilon must be in [0, 1]");
    const std::size_t n = predictions.size();
    check_budget(budget, n);

    std::vector<std::size_t> ranked = top_k(predictions, n);
    std::vector<char> taken(n, 0);
    // `pool` holds untaken positions; `slot` locates each one for O(1) removal.
    std::vector<std::size_t> pool(n), slot(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::iota(slot.begin(), slot.end(), 0);
    auto remove = [&](std::size_t arm) {
        const std::size_t s = slot[arm], last = pool.back();
        pool[s] = last;
        slot[last] = s;
        pool.pop_back();
        taken[arm] = 1;
    };

    SelectionBatch b;
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < budget; ++k) {
        std::size_t arm;
        if (rng.bernoulli(epsilon)) {
            arm = pool[rng.index(pool.size())];
            b.random_picks.push_back(arm);
        } else {
            while (taken[ranked[cursor]]) ++cursor;
            arm = ranked[cursor];
        }
        remove(arm);
        b.selected.push_back(arm);
    }
    return b;
}

SelectionBatch select_ucb(std::span<const double> means, std::span<const double> dispersions, double z,
                          std::size_t budget) {
    require(means.size() == dispersions.size(), ErrorCategory::internal, "means and dispersions differ in length");
    require(z >= 0.0, ErrorCategory::config, "UCB Z must be >= 0");
    check_budget(budget, means.size());
    std::vector<double> score(means.size());
    for (std::size_t i = 0; i < score.size(); ++i) score[i] = means[i] + z * dispersions[i];
    SelectionBatch b;
    b.selected = top_k(score, budget);
    return b;
}

SelectionBatch select_random(std::size_t population_size, std::size_t budget, RngStream& rng) {
    check_budget(budget, population_size);
    std::vector<std::size_t> pool(population_size);
    std::iota(pool.begin(), pool.end(), 0);
    SelectionBatch b;
    for (std::size_t k = 0; k < budget; ++k) {
        std::swap(pool[k], pool[k + rng.index(population_size - k)]);
        b.selected.push_back(pool[k]);
    }
    const double p = population_size == 0 ? 0.0 : static_cast<double>(budget) / static_cast<double>(population_size);
    b.inclusion_probs = std::vector<double>(population_size, p);
    return b;
}

SelectionBatch select_lda_rank(std::span<const double> scores, std::size_t budget) {
    check_budget(budget, scores.size());
    SelectionBatch b;
    b.selected = top_k(scores, budget);
    return b;
}

SelectionBatch to_batch(const AbsDraw& draw) {
    SelectionBatch b;
    b.selected = draw.greedy_top;
    b.selected.insert(b.selected.end(), draw.sampled.begin(), draw.sampled.end());
    b.greedy_top = draw.greedy_top;
    b.inclusion_probs = draw.inclusion_probs;
    return b;
}

SelectionBatch select_abs(std::span<const double> predictions, const AbsParams& params, std::size_t budget,
                          RngStream& rng) {
    return to_batch(select_abs_batch(predictions, params, budget, rng));
}

}  // namespace oeb
