#include "oeb/abs_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oeb/error.hpp"

namespace oeb {

std::string to_string(Smoothing s) { return s == Smoothing::logistic ? "logistic" : "exponential"; }

Smoothing parse_smoothing(const std::string& s) {
    if (s == "logistic") return Smoothing::logistic;
    if (s == "exponential") return Smoothing::exponential;
    fail(ErrorCategory::config, "unknown smoothing '" + s + "' (expected logistic or exponential)");
}

void validate(const AbsParams& params, std::size_t budget) {
    require(std::isfinite(params.alpha) && params.alpha >= 0.0, ErrorCategory::config, "ABS alpha must be >= 0");
    require(params.zeta <= budget, ErrorCategory::config,
            "ABS zeta " + std::to_string(params.zeta) + " exceeds budget " + std::to_string(budget));
    require(params.num_strata >= 1, ErrorCategory::config, "ABS needs at least one stratum");
    require(params.trim >= 0.0 && params.trim * static_cast<double>(params.num_strata) < 1.0, ErrorCategory::config,
            "ABS trim must satisfy 0 <= trim < 1/num_strata");
}

double Stratification::objective(std::span<const double> values) const {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - means[assignment[i]];
        total += d * d;
    }
    return total;
}

double kth_largest(std::span<const double> values, std::size_t k) {
    require(k >= 1 && k <= values.size(), ErrorCategory::internal,
            "kth_largest: k=" + std::to_string(k) + " outside [1, " + std::to_string(values.size()) + "]");
    std::vector<double> v(values.begin(), values.end());
    auto nth = v.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(v.begin(), nth, v.end(), std::greater<>());
    return *nth;
}

namespace {

// Affine map of [min, max] onto [lo, hi]; false when the input is constant.
bool rescale(std::span<const double> in, double lo, double hi, std::vector<double>& out) {
    const auto [mn, mx] = std::minmax_element(in.begin(), in.end());
    out.resize(in.size());
    if (!(*mx > *mn)) return false;
    const double scale = (hi - lo) / (*mx - *mn);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = lo + (in[i] - *mn) * scale;
    return true;
}

}  // namespace

std::vector<double> smooth_logistic(std::span<const double> predictions, double alpha, std::size_t k) {
    require(!predictions.empty() && k >= 1 && k <= predictions.size(), ErrorCategory::internal,
            "smooth_logistic needs 1 <= k <= number of predictions");
    std::vector<double> r;
    if (!rescale(predictions, -5.0, 5.0, r)) return std::vector<double>(predictions.size(), 0.5);
    const double kappa = kth_largest(r, k);
    for (double& v : r) v = 1.0 / (1.0 + std::exp(-alpha * (v - kappa)));
    return r;
}

std::vector<double> smooth_exponential(std::span<const double> predictions, double alpha) {
    require(!predictions.empty(), ErrorCategory::internal, "smooth_exponential needs at least one prediction");
    std::vector<double> r;
    if (!rescale(predictions, 0.0, 1.0, r)) return std::vector<double>(predictions.size(), 1.0);
    for (double& v : r) v = std::exp(alpha * v);
    return r;
}

Stratification stratify(std::span<const double> smoothed, std::size_t num_strata, std::size_t min_size) {
    const std::size_t n = smoothed.size(), h_count = num_strata;
    require(h_count >= 1, ErrorCategory::config, "stratify needs at least one stratum");
    require(n >= h_count * min_size && n >= h_count, ErrorCategory::infeasible,
            "stratification needs at least " + std::to_string(std::max(h_count * min_size, h_count)) +
                " arms (" + std::to_string(h_count) + " strata of >= " + std::to_string(min_size) + "), have " +
                std::to_string(n));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return smoothed[a] < smoothed[b]; });
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = smoothed[order[k]];

    // Prefix sums of centred values keep the SSE differences well conditioned.
    const double centre = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double c = v[k] - centre;
        s1[k + 1] = s1[k] + c;
        s2[k + 1] = s2[k] + c * c;
    }
    auto mean = [&](std::size_t lo, std::size_t hi) {
        return centre + (s1[hi] - s1[lo]) / static_cast<double>(hi - lo);
    };
    // Improvements below this are rounding noise, not progress.
    const double tol = 1e-12 * (s2[n] + std::numeric_limits<double>::min());
    auto sse = [&](const std::vector<std::size_t>& b) {
        double total = 0.0;
        for (std::size_t h = 0; h < h_count; ++h) {
            const double cnt = static_cast<double>(b[h + 1] - b[h]);
            const double s = s1[b[h + 1]] - s1[b[h]];
            total += (s2[b[h + 1]] - s2[b[h]]) - s * s / cnt;
        }
        return total;
    };

    // bounds[h] is the first sorted position of stratum h; bounds[H] = n.
    std::vector<std::size_t> bounds(h_count + 1);
    for (std::size_t h = 0; h <= h_count; ++h) bounds[h] = h * n / h_count;

    double current = sse(bounds);
    for (int iter = 0; iter < 500 && h_count > 1; ++iter) {
        std::vector<std::size_t> next = bounds;
        for (std::size_t h = 1; h < h_count; ++h) {
            const double lo = mean(bounds[h - 1], bounds[h]), hi = mean(bounds[h], bounds[h + 1]);
            if (lo == hi) continue;
            const double mid = 0.5 * (lo + hi);
            next[h] = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), mid) - v.begin());
        }
        for (std::size_t h = 1; h < h_count; ++h) {
            next[h] = std::max(next[h], next[h - 1] + min_size);
            next[h] = std::min(next[h], n - (h_count - h) * min_size);
        }
        if (next == bounds) break;
        const double candidate = sse(next);
        if (!(candidate < current - tol)) break;
        bounds = std::move(next);
        current = candidate;
    }

    Stratification out;
    out.assignment.resize(n);
    out.sizes.resize(h_count);
    out.means.resize(h_count);
    for (std::size_t h = 0; h < h_count; ++h) {
        out.sizes[h] = bounds[h + 1] - bounds[h];
        double sum = 0.0;
        for (std::size_t k = bounds[h]; k < bounds[h + 1]; ++k) {
            out.assignment[order[k]] = h;
            sum += v[k];
        }
        out.means[h] = sum / static_cast<double>(out.sizes[h]);
    }
    return out;
}

std::vector<double> strata_distribution(const Stratification& strat, double trim) {
    const std::size_t h_count = strat.num_strata();
    require(h_count >= 1, ErrorCategory::internal, "strata_distribution on an empty stratification");
    require(trim >= 0.0 && trim * static_cast<double>(h_count) < 1.0, ErrorCategory::config,
            "trim * num_strata must be < 1");
    for (double l : strat.means) require(l >= 0.0, ErrorCategory::internal, "negative stratum mean");

    std::vector<char> clamped(h_count, 0);
    std::vector<double> pi(h_count, 0.0);
    for (;;) {
        double free_mass = 1.0, free_lambda = 0.0;
        for (std::size_t h = 0; h < h_count; ++h) {
            if (clamped[h]) free_mass -= trim;
            else free_lambda += strat.means[h];
        }
        require(free_lambda > 0.0, ErrorCategory::infeasible,
                "all unclamped strata have zero mean; smoothing underflowed (lower alpha or raise trim)");
        bool changed = false;
        for (std::size_t h = 0; h < h_count; ++h) {
            if (clamped[h]) {
                pi[h] = trim;
                continue;
            }
            pi[h] = free_mass * strat.means[h] / free_lambda;
            if (pi[h] < trim) {
                clamped[h] = 1;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return pi;
}

std::vector<double> inclusion_probabilities(const Stratification& strat, std::size_t m) {
    require(strat.pi.size() == strat.num_strata(), ErrorCategory::internal, "stratification has no distribution");
    for (std::size_t h = 0; h < strat.num_strata(); ++h)
        require(m <= strat.sizes[h], ErrorCategory::infeasible,
                "m=" + std::to_string(m) + " exceeds stratum size " + std::to_string(strat.sizes[h]));
    std::vector<double> p(strat.assignment.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const std::size_t h = strat.assignment[i];
        p[i] = static_cast<double>(m) * strat.pi[h] / static_cast<double>(strat.sizes[h]);
    }
    return p;
}

double joint_inclusion_probability(const Stratification& strat, std::size_t m, std::size_t a, std::size_t b) {
    require(a != b, ErrorCategory::internal, "joint inclusion of an arm with itself; use the marginal");
    require(strat.pi.size() == strat.num_strata(), ErrorCategory::internal, "stratification has no distribution");
    if (m < 2) return 0.0;
    const std::size_t h = strat.assignment[a], g = strat.assignment[b];
    const double mm = static_cast<double>(m) * static_cast<double>(m - 1);
    const double nh = static_cast<double>(strat.sizes[h]), ng = static_cast<double>(strat.sizes[g]);
    if (g != h) return mm * strat.pi[h] * strat.pi[g] / (nh * ng);
    return mm * strat.pi[h] * strat.pi[h] / (nh * (nh - 1.0));
}

double ht_variance(std::span<const double> rewards, const Stratification& strat, std::size_t m,
                   std::size_t population_size) {
    require(m >= 1, ErrorCategory::internal, "ht_variance needs m >= 1");
    require(rewards.size() == strat.assignment.size(), ErrorCategory::internal, "rewards do not match stratification");
    require(strat.pi.size() == strat.num_strata(), ErrorCategory::internal, "stratification has no distribution");
    const std::size_t h_count = strat.num_strata();
    const double md = static_cast<double>(m);

    std::vector<double> stratum_sum(h_count, 0.0), stratum_sq(h_count, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        stratum_sum[strat.assignment[i]] += rewards[i];
        stratum_sq[strat.assignment[i]] += rewards[i] * rewards[i];
        total += rewards[i];
    }

    double v1 = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
        require(strat.pi[h] > 0.0, ErrorCategory::internal, "ht_variance needs pi_h > 0");
        v1 += (static_cast<double>(strat.sizes[h]) / strat.pi[h] - md) * stratum_sq[h];
    }

    // sum_{a in S_h} r_a * sum_{b in S_h, b != a} r_b = T_h^2 - Q_h.
    double v2 = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
        const std::size_t nh = strat.sizes[h];
        const double within = stratum_sum[h] * stratum_sum[h] - stratum_sq[h];
        double c = 0.0;
        if (nh > 1) {
            c = (static_cast<double>(nh) - md) / (static_cast<double>(nh) - 1.0);
        } else {
            require(m <= 1, ErrorCategory::infeasible, "ht_variance undefined: singleton stratum with m > 1");
        }
        v2 += c * within + stratum_sum[h] * (total - stratum_sum[h]);
    }

    const double n = static_cast<double>(population_size);
    return (v1 - v2) / (md * n * n);
}

double ht_variance(const AbsPlan& plan, std::span<const double> population_rewards) {
    require(population_rewards.size() == plan.population_size, ErrorCategory::internal,
            "rewards do not cover the population");
    std::vector<double> r(plan.remaining.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = population_rewards[plan.remaining[i]];
    return ht_variance(r, plan.strata, plan.m, plan.population_size);
}

AbsPlan plan_abs(std::span<const double> predictions, const AbsParams& params, std::size_t budget) {
    validate(params, budget);
    const std::size_t n = predictions.size();
    require(budget <= n, ErrorCategory::infeasible,
            "budget " + std::to_string(budget) + " exceeds population size " + std::to_string(n));

    AbsPlan plan;
    plan.population_size = n;
    plan.budget = budget;
    plan.m = budget - params.zeta;
    plan.inclusion_probs.assign(n, 0.0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predictions[a] > predictions[b]; });
    plan.greedy_top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(params.zeta));
    std::sort(plan.greedy_top.begin(), plan.greedy_top.end());
    for (std::size_t i : plan.greedy_top) plan.inclusion_probs[i] = 1.0;

    std::vector<char> is_top(n, 0);
    for (std::size_t i : plan.greedy_top) is_top[i] = 1;
    for (std::size_t i = 0; i < n; ++i)
        if (!is_top[i]) plan.remaining.push_back(i);
    if (plan.m == 0) return plan;

    std::vector<double> rest(plan.remaining.size());
    for (std::size_t i = 0; i < rest.size(); ++i) rest[i] = predictions[plan.remaining[i]];
    // kappa is the K-th largest of all predictions, i.e. the m-th largest of
    // those left after removing the zeta largest.
    plan.smoothed = params.smoothing == Smoothing::logistic ? smooth_logistic(rest, params.alpha, plan.m)
                                                            : smooth_exponential(rest, params.alpha);
    plan.strata = stratify(plan.smoothed, params.num_strata, plan.m);
    plan.strata.pi = strata_distribution(plan.strata, params.trim);
    for (std::size_t h = 0; h < plan.strata.num_strata(); ++h)
        require(plan.strata.pi[h] > 0.0, ErrorCategory::infeasible,
                "stratum " + std::to_string(h) + " has zero sampling probability (smoothing underflow)");

    const std::vector<double> p = inclusion_probabilities(plan.strata, plan.m);
    plan.members.assign(plan.strata.num_strata(), {});
    for (std::size_t i = 0; i < plan.remaining.size(); ++i) {
        plan.inclusion_probs[plan.remaining[i]] = p[i];
        plan.members[plan.strata.assignment[i]].push_back(plan.remaining[i]);
    }
    return plan;
}

AbsDraw draw_abs(const AbsPlan& plan, RngStream& rng) {
    AbsDraw draw;
    draw.greedy_top = plan.greedy_top;
    draw.inclusion_probs = plan.inclusion_probs;
    if (plan.m == 0) return draw;

    const std::size_t h_count = plan.strata.num_strata();
    std::vector<double> cdf(h_count);
    std::partial_sum(plan.strata.pi.begin(), plan.strata.pi.end(), cdf.begin());
    std::vector<std::size_t> hits(h_count, 0);
    for (std::size_t k = 0; k < plan.m; ++k) {
        const double u = rng.uniform() * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        ++hits[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), h_count - 1)];
    }

    draw.sampled.reserve(plan.m);
    std::vector<std::size_t> pool;
    for (std::size_t h = 0; h < h_count; ++h) {
        if (hits[h] == 0) continue;
        pool = plan.members[h];
        require(hits[h] <= pool.size(), ErrorCategory::internal, "stratum drawn more often than it has arms");
        for (std::size_t k = 0; k < hits[h]; ++k) {
            std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);
            draw.sampled.push_back(pool[k]);
        }
    }
    return draw;
}

AbsDraw select_abs_batch(std::span<const double> predictions, const AbsParams& params, std::size_t budget,
                         RngStream& rng) {
    return draw_abs(plan_abs(predictions, params, budget), rng);
}

}  // namespace oeb
