#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "oeb/error.hpp"
#include "oeb/estimators.hpp"
#include "oeb/policies.hpp"

using namespace oeb;
using testutil::make_pop;

namespace {

SelectionBatch ht_batch(std::vector<std::size_t> selected, std::vector<double> probs, std::vector<std::size_t> top = {}) {
    SelectionBatch b;
    b.selected = std::move(selected);
    b.inclusion_probs = std::move(probs);
    b.greedy_top = std::move(top);
    return b;
}

}  // namespace

TEST_CASE("model-based estimate") {
    const auto pop = make_pop({4, 0}, {1, 3});
    CHECK(model_based_estimate(std::vector<double>{4, 0}, pop) == doctest::Approx(1.0));
    CHECK(model_based_estimate(std::vector<double>{6, 6}, pop) == doctest::Approx(6.0));
    CHECK(model_based_estimate(pop.rewards(), pop) == weighted_population_mean(pop));
    CHECK_THROWS_AS(model_based_estimate(ForestModel{}, pop), Error);
    CHECK_THROWS_AS(model_based_estimate(RidgeModel{}, pop), Error);

    const ForestModel constant({RegressionTree({RegressionTree::Node{-1, 0, -1, -1, 12.5}})}, ForestParams{}, 1);
    CHECK(model_based_estimate(constant, pop) == doctest::Approx(12.5));
}

TEST_CASE("ht estimate enumerations") {
    const std::vector<double> r{1, 3}, w{1, 1};
    const double a = ht_estimate(ht_batch({1}, {0.5, 0.5}), r, w, 2.0);
    const double b = ht_estimate(ht_batch({0}, {0.5, 0.5}), r, w, 2.0);
    CHECK(a == doctest::Approx(3.0));
    CHECK(b == doctest::Approx(1.0));
    CHECK(0.5 * (a + b) == doctest::Approx(2.0));

    const std::vector<double> r3{10, 1, 3}, w3{1, 1, 1};
    const double lo = ht_estimate(ht_batch({0, 1}, {1.0, 0.5, 0.5}, {0}), r3, w3, 3.0);
    const double hi = ht_estimate(ht_batch({0, 2}, {1.0, 0.5, 0.5}, {0}), r3, w3, 3.0);
    CHECK(lo == doctest::Approx(4.0));
    CHECK(hi == doctest::Approx(16.0 / 3.0));
    CHECK(0.5 * (lo + hi) == doctest::Approx(14.0 / 3.0));

    // greedy-top only
    const std::vector<double> wt{2, 1, 1};
    CHECK(ht_estimate(ht_batch({0}, {1.0, 0.0, 0.0}, {0}), r3, wt, 4.0) == doctest::Approx(10.0 * 2.0 / 4.0));

    CHECK_THROWS_AS(ht_estimate(SelectionBatch{{}, {0}, std::nullopt, {}, {}}, r, w, 2.0), Error);
    CHECK_THROWS_AS(ht_estimate(ht_batch({0}, {0.0, 1.0}), r, w, 2.0), Error);
}

TEST_CASE("ht under uniform sampling is the sample mean") {
    RngStream rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 10 + rng.index(40), k = 1 + rng.index(n);
        const auto r = testutil::uniform_vector(rng, n, 0, 1000);
        const std::vector<double> w(n, 1.0);
        const auto b = select_random(n, k, rng);
        double s = 0.0;
        for (std::size_t i : b.selected) s += r[i];
        CHECK(ht_estimate(b, r, w, static_cast<double>(n)) == doctest::Approx(s / static_cast<double>(k)).epsilon(1e-12));

        std::vector<double> r2 = r;
        for (double& x : r2) x *= 3.5;
        CHECK(ht_estimate(b, r2, w, static_cast<double>(n)) ==
              doctest::Approx(3.5 * ht_estimate(b, r, w, static_cast<double>(n))).epsilon(1e-12));
    }
}

TEST_CASE("epsilon-sample estimate") {
    const auto pop = make_pop({5, 7, 9, 11}, {1, 2, 3, 4});
    SelectionBatch all;
    all.selected = all.random_picks = {0, 1, 2, 3};
    CHECK(epsilon_sample_estimate(all, pop.rewards(), pop.weights()) == doctest::Approx(weighted_population_mean(pop)));
    SelectionBatch one;
    one.selected = {0, 2};
    one.random_picks = {2};
    CHECK(epsilon_sample_estimate(one, pop.rewards(), pop.weights()) == 9.0);
    SelectionBatch none;
    none.selected = {0};
    CHECK_THROWS_AS(epsilon_sample_estimate(none, pop.rewards(), pop.weights()), Error);
}

TEST_CASE("epsilon-sample estimate is unbiased under epsilon one") {
    const auto pop = make_pop({0, 100, 250, 1000});
    const double truth = weighted_population_mean(pop);
    const std::vector<double> p{4, 3, 2, 1};
    RngStream rng(42);
    std::vector<double> est;
    for (int t = 0; t < 100000; ++t)
        est.push_back(epsilon_sample_estimate(select_epsilon_greedy(p, 2, 1.0, rng), pop.rewards(), pop.weights()));
    const double m = std::accumulate(est.begin(), est.end(), 0.0) / static_cast<double>(est.size());
    double v = 0.0;
    for (double e : est) v += (e - m) * (e - m);
    const double se = std::sqrt(v / static_cast<double>(est.size() - 1) / static_cast<double>(est.size()));
    CHECK(std::abs(m - truth) < 3.0 * se);
}

TEST_CASE("estimate records") {
    const auto rec = make_estimate_record(2008, EstimatorKind::horvitz_thompson, 110.0, 100.0);
    CHECK(rec.percent_difference == doctest::Approx(10.0));
    CHECK(to_string(EstimatorKind::model_based) != to_string(EstimatorKind::horvitz_thompson));
}
