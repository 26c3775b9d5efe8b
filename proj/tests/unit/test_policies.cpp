#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "oeb/error.hpp"
#include "oeb/policies.hpp"

using namespace oeb;

namespace {

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("greedy selection and ties") {
    CHECK(sorted(select_greedy(std::vector<double>{5, 1, 3}, 2).selected) == std::vector<std::size_t>{0, 2});
    CHECK(sorted(select_greedy(std::vector<double>{7, 7, 7, 7}, 2).selected) == std::vector<std::size_t>{0, 1});
    CHECK(sorted(select_greedy(std::vector<double>{1, 2, 3}, 3).selected) == std::vector<std::size_t>{0, 1, 2});
    CHECK(sorted(select_greedy(std::vector<double>{1, 9, 9, 9, 0}, 2).selected) == std::vector<std::size_t>{1, 2});
    CHECK_THROWS_AS(select_greedy(std::vector<double>{1, 2}, 3), Error);
}

TEST_CASE("greedy is invariant to increasing transforms") {
    RngStream rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        auto p = testutil::uniform_vector(rng, 40, -10, 10);
        std::vector<double> t(p.size());
        std::transform(p.begin(), p.end(), t.begin(), [](double x) { return std::exp(0.3 * x) + 4.0; });
        CHECK(sorted(select_greedy(p, 12).selected) == sorted(select_greedy(t, 12).selected));
    }
}

TEST_CASE("epsilon zero and Z zero reduce to greedy") {
    RngStream rng(32);
    for (int rep = 0; rep < 30; ++rep) {
        const auto p = testutil::uniform_vector(rng, 50, 0, 100);
        const auto d = testutil::uniform_vector(rng, 50, 0, 100);
        RngStream r(rep);
        const auto g = select_greedy(p, 10);
        const auto e = select_epsilon_greedy(p, 10, 0.0, r);
        CHECK(e.selected == g.selected);
        CHECK(e.random_picks.empty());
        CHECK(select_ucb(p, d, 0.0, 10).selected == g.selected);
    }
}

TEST_CASE("ucb scores") {
    const std::vector<double> means{2, 5}, disp{4, 0};
    CHECK(select_ucb(means, disp, 1.0, 1).selected == std::vector<std::size_t>{0});
    CHECK(select_ucb(means, disp, 10.0, 1).selected == std::vector<std::size_t>{0});
    CHECK(select_ucb(means, disp, 0.5, 1).selected == std::vector<std::size_t>{1});
}

TEST_CASE("epsilon one is uniform without replacement") {
    const std::size_t n = 10, k = 3;
    const std::vector<double> p{9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
    RngStream rng(33);
    std::vector<double> freq(n, 0.0);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        const auto b = select_epsilon_greedy(p, k, 1.0, rng);
        CHECK_EQ(b.random_picks.size(), k);
        for (std::size_t i : b.selected) freq[i] += 1.0;
    }
    for (double f : freq) CHECK(std::abs(f / trials - double(k) / n) < 0.005);
}

TEST_CASE("epsilon sample size is binomial") {
    RngStream rng(34);
    const auto p = testutil::uniform_vector(rng, 200, 0, 1);
    const std::size_t k = 60;
    const double eps = 0.1;
    double total = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const auto b = select_epsilon_greedy(p, k, eps, rng);
        CHECK(std::set<std::size_t>(b.selected.begin(), b.selected.end()).size() == k);
        total += static_cast<double>(b.random_picks.size());
    }
    const double se = std::sqrt(k * eps * (1 - eps) / trials);
    CHECK(std::abs(total / trials - k * eps) < 3.0 * se);
}

TEST_CASE("random selection") {
    RngStream rng(35);
    const auto all = select_random(5, 5, rng);
    CHECK(sorted(all.selected) == std::vector<std::size_t>{0, 1, 2, 3, 4});
    REQUIRE(all.inclusion_probs);
    for (double q : *all.inclusion_probs) CHECK(q == 1.0);
    CHECK(select_random(5, 0, rng).selected.empty());
    CHECK_THROWS_AS(select_random(3, 4, rng), Error);

    std::vector<double> freq(4, 0.0);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) freq[select_random(4, 1, rng).selected[0]] += 1.0;
    for (double f : freq) CHECK(std::abs(f / trials - 0.25) < 0.005);
    const auto one = select_random(4, 1, rng);
    for (double q : *one.inclusion_probs) CHECK(q == 0.25);
}

TEST_CASE("lda rank selection") {
    CHECK(select_lda_rank(std::vector<double>{0.9, 0.1, 0.5}, 1).selected == std::vector<std::size_t>{0});
    CHECK(sorted(select_lda_rank(std::vector<double>{1, 1, 1, 1}, 3).selected) == std::vector<std::size_t>{0, 1, 2});
    const std::vector<double> s{-2.0, 0.3, 1.7, -0.1};
    std::vector<double> t(s.size());
    std::transform(s.begin(), s.end(), t.begin(), [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    CHECK(sorted(select_lda_rank(s, 2).selected) == sorted(select_lda_rank(t, 2).selected));
}

TEST_CASE("every policy returns K distinct arms") {
    RngStream rng(36);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 30 + rng.index(50), k = 1 + rng.index(20);
        const auto p = testutil::uniform_vector(rng, n, 0, 1000);
        const auto d = testutil::uniform_vector(rng, n, 0, 10);
        PolicySpec abs;
        abs.kind = PolicyKind::abs;
        abs.num_strata = 2;
        abs.zeta_fraction = 0.5;
        std::vector<SelectionBatch> batches{select_greedy(p, k), select_epsilon_greedy(p, k, 0.3, rng),
                                            select_ucb(p, d, 1.0, k), select_random(n, k, rng), select_lda_rank(p, k),
                                            select_abs(p, abs.abs_params(k), k, rng)};
        for (const auto& b : batches) CHECK_NOTHROW(validate_batch(b, n, k));
    }
}

TEST_CASE("abs batch carries inclusion probabilities") {
    RngStream rng(37);
    const auto p = testutil::uniform_vector(rng, 100, 0, 1000);
    PolicySpec spec;
    spec.kind = PolicyKind::abs;
    const AbsParams params = spec.abs_params(10);
    CHECK(params.zeta == 8);
    CHECK(params.alpha == 5.0);
    CHECK(params.trim == 0.025);
    CHECK(params.smoothing == Smoothing::exponential);
    const auto b = select_abs(p, params, 10, rng);
    REQUIRE(b.inclusion_probs);
    CHECK(b.greedy_top.size() == 8);
    const double sum = std::accumulate(b.inclusion_probs->begin(), b.inclusion_probs->end(), 0.0);
    CHECK(sum == doctest::Approx(10.0).epsilon(1e-9));  // 8 certain + m = 2
}

TEST_CASE("policy spec parsing and validation") {
    CHECK(parse_policy_kind("greedy") == PolicyKind::greedy);
    CHECK(parse_policy_kind("eps") == PolicyKind::epsilon_greedy);
    CHECK(parse_policy_kind("lda") == PolicyKind::lda_rank);
    CHECK_THROWS_AS(parse_policy_kind("thompson"), Error);
    PolicySpec s;
    s.kind = PolicyKind::epsilon_greedy;
    s.epsilon = 1.5;
    CHECK_THROWS_AS(s.validate(), Error);
    s.epsilon = 0.1;
    s.kind = PolicyKind::ucb;
    s.ucb_z = -1;
    CHECK_THROWS_AS(s.validate(), Error);
    PolicySpec a, b;
    a.kind = b.kind = PolicyKind::abs;
    b.trim = 0.05;
    CHECK(a.canonical() != b.canonical());
}
