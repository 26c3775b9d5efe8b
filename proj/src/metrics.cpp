#include "oeb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oeb/error.hpp"

namespace oeb {

double percent_difference(Currency estimate, Currency true_mean) {
    require(true_mean != 0.0, ErrorCategory::data, "percent difference against a zero true mean");
    return 100.0 * (estimate - true_mean) / true_mean;
}

double mean(std::span<const double> v) {
    require(!v.empty(), ErrorCategory::internal, "mean of an empty set");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    require(v.size() >= 2, ErrorCategory::internal, "sample standard deviation needs at least two values");
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

PeStatistics pe_statistics(const SeedYearMatrix& pd) {
    require(pd.seeds() >= 2, ErrorCategory::data, "sigma_PE needs at least two seeds");
    require(pd.years() >= 1, ErrorCategory::data, "percent-difference matrix has no years");
    PeStatistics out;
    out.mu_pe = std::abs(mean(pd.values()));
    double sq = 0.0;
    for (double v : pd.values()) sq += v * v;
    out.rms_pe = std::sqrt(sq / static_cast<double>(pd.values().size()));
    std::vector<double> column(pd.seeds());
    double sd_sum = 0.0;
    for (std::size_t y = 0; y < pd.years(); ++y) {
        for (std::size_t s = 0; s < pd.seeds(); ++s) column[s] = pd(s, y);
        sd_sum += sample_sd(column);
    }
    out.sigma_pe = sd_sum / static_cast<double>(pd.years());
    return out;
}

double no_change_rate(std::span<const double> rewards, Currency cutoff) {
    require(!rewards.empty(), ErrorCategory::data, "no-change rate of an empty batch");
    const auto n = std::count_if(rewards.begin(), rewards.end(), [&](double r) { return is_no_change(r, cutoff); });
    return static_cast<double>(n) / static_cast<double>(rewards.size());
}

std::vector<std::size_t> ranking_from_scores(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

double ranked_reward_area(std::span<const std::size_t> order, std::span<const double> rewards,
                          std::span<const double> weights) {
    double prefix = 0.0, area = 0.0;
    for (std::size_t i : order) {
        prefix += weights[i] * rewards[i];
        area += prefix;
    }
    return area;
}

double rare_score(std::span<const std::size_t> predicted_order, std::span<const double> rewards,
                  std::span<const double> weights) {
    const std::size_t n = rewards.size();
    require(weights.size() == n && predicted_order.size() == n, ErrorCategory::internal,
            "RARE inputs differ in length");
    std::vector<char> seen(n, 0);
    for (std::size_t i : predicted_order) {
        require(i < n && !seen[i], ErrorCategory::internal, "RARE ordering is not a permutation");
        seen[i] = 1;
    }
    std::vector<double> wr(n);
    for (std::size_t i = 0; i < n; ++i) wr[i] = weights[i] * rewards[i];
    std::vector<std::size_t> best = ranking_from_scores(wr);
    std::vector<std::size_t> worst(best.rbegin(), best.rend());

    const double hi = ranked_reward_area(best, rewards, weights);
    const double lo = ranked_reward_area(worst, rewards, weights);
    require(hi > lo, ErrorCategory::data, "RARE undefined: all weighted rewards are equal");
    return (ranked_reward_area(predicted_order, rewards, weights) - lo) / (hi - lo);
}

double covariate_drift(const FeatureRows& a, const FeatureRows& b, std::size_t num_bins) {
    require(!a.empty() && !b.empty(), ErrorCategory::data, "covariate drift needs two non-empty samples");
    require(num_bins >= 1, ErrorCategory::config, "covariate drift needs at least one bin");
    const std::size_t nf = a.front().size();
    for (const auto* rows : {&a, &b})
        for (const auto& r : *rows)
            require(r.size() == nf, ErrorCategory::data, "covariate drift: feature counts differ");
    if (nf == 0) return 0.0;

    double total = 0.0;
    std::vector<double> p(num_bins), q(num_bins);
    for (std::size_t f = 0; f < nf; ++f) {
        double lo = a.front()[f], hi = lo;
        for (const auto* rows : {&a, &b})
            for (const auto& r : *rows) {
                lo = std::min(lo, r[f]);
                hi = std::max(hi, r[f]);
            }
        if (!(hi > lo)) continue;  // constant covariate: identical histograms
        const double width = (hi - lo) / static_cast<double>(num_bins);
        auto fill = [&](const FeatureRows& rows, std::vector<double>& h) {
            std::fill(h.begin(), h.end(), 0.0);
            for (const auto& r : rows) {
                auto bin = static_cast<std::size_t>((r[f] - lo) / width);
                h[std::min(bin, num_bins - 1)] += 1.0;
            }
            for (double& v : h) v /= static_cast<double>(rows.size());
        };
        fill(a, p);
        fill(b, q);
        double overlap = 0.0;
        for (std::size_t i = 0; i < num_bins; ++i) overlap += std::min(p[i], q[i]);
        total += std::max(0.0, 1.0 - overlap);
    }
    return total / static_cast<double>(nf);
}

double covariate_drift(const PopulationYear& year_a, const PopulationYear& year_b, std::size_t num_bins) {
    auto rows = [](const PopulationYear& pop) {
        FeatureRows out;
        out.reserve(pop.size());
        for (const ArmRecord& a : pop.arms()) out.push_back(a.features);
        return out;
    };
    return covariate_drift(rows(year_a), rows(year_b), num_bins);
}

Currency cumulative_reward(std::span<const double> per_year_batch_rewards) {
    return std::accumulate(per_year_batch_rewards.begin(), per_year_batch_rewards.end(), 0.0);
}

Currency cumulative_avg_tpi(const std::vector<std::vector<double>>& per_year_selected_tpi) {
    double total = 0.0;
    for (const auto& year : per_year_selected_tpi) {
        require(!year.empty(), ErrorCategory::data, "cumulative average TPI over an empty batch");
        total += mean(year);
    }
    return total;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCategory::internal, "spearman needs two equal-length series");
    const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
    const double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace oeb
