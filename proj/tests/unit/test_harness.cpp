#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "oeb/data_io.hpp"
#include "oeb/error.hpp"
#include "oeb/harness.hpp"
#include "oeb/metrics.hpp"
#include "oeb/results_io.hpp"

using namespace oeb;

namespace {

const std::vector<PopulationYear>& small_world() {
    static const auto pops = [] {
        SyntheticConfig c;
        c.num_years = 5;
        c.arms_per_year = 250;
        c.num_features = 8;
        c.seed = 7;
        return generate_synthetic(c);
    }();
    return pops;
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.budget = 20;
    c.seeds = {0, 1, 2};
    c.model.forest.num_trees = 10;
    c.model.forest.max_depth = 6;
    return c;
}

PolicyRun policy(PolicyKind k) {
    PolicyRun r;
    r.policy.kind = k;
    return r;
}

}  // namespace

TEST_CASE("nearest-rank percentile and winsorize") {
    CHECK(winsorize(std::vector<double>{-5, 10, 20}) == std::vector<double>{0, 10, 20});
    CHECK(winsorize(std::vector<double>{4, 4, 4}) == std::vector<double>{4, 4, 4});
    CHECK_THROWS_AS(winsorize(std::vector<double>{}), Error);

    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = 100 - i;  // unsorted input
    const auto w = winsorize(v);
    // Sort oracle: smallest value with at least 99% of the sample at or below it.
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    double cap = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double at_or_below = static_cast<double>(std::upper_bound(s.begin(), s.end(), s[i]) - s.begin());
        if (at_or_below >= 0.99 * 100) {
            cap = s[i];
            break;
        }
    }
    CHECK(cap == 99.0);
    CHECK(w[0] == cap);
    for (std::size_t i = 1; i < v.size(); ++i) CHECK(w[i] == v[i]);

    RngStream rng(61);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.index(300);
        const auto x = testutil::uniform_vector(rng, n, -50, 1000);
        std::vector<double> sx = x;
        std::sort(sx.begin(), sx.end());
        double oracle = sx.back();
        for (std::size_t i = 0; i < n; ++i)
            if (static_cast<double>(i + 1) >= 0.99 * static_cast<double>(n) - 1e-9) {
                oracle = sx[i];
                break;
            }
        CHECK(nearest_rank_percentile(x, 99.0) == oracle);
    }
}

TEST_CASE("subsampling") {
    std::vector<double> r(10);
    for (int i = 0; i < 10; ++i) r[i] = i;
    const auto pop = testutil::make_pop(r);
    CHECK(subsample_population(pop, 1.0, 3) == pop);
    const auto a = subsample_population(pop, 0.8, 3);
    CHECK(a.size() == 8);
    CHECK(a == subsample_population(pop, 0.8, 3));
    CHECK_FALSE(a == subsample_population(pop, 0.8, 4));
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].id < a[i].id);
    CHECK_THROWS_AS(subsample_population(pop, 0.0, 3), Error);
    CHECK_THROWS_AS(subsample_population(pop, 1.5, 3), Error);
}

TEST_CASE("run_seed shape and audit") {
    auto cfg = small_config();
    for (int delay : {1, 2}) {
        cfg.delay = delay;
        const auto res = run_seed(small_world(), cfg, policy(PolicyKind::greedy), 0);
        CHECK(res.warm_start_rows.size() == 2);
        CHECK(res.rows.size() == 3);
        CHECK(res.selected_ids.size() == 5);
        for (const auto& row : res.rows) {
            CHECK(row.n_selected == 20);
            CHECK(std::accumulate(row.class_hist.begin(), row.class_hist.end(), std::size_t{0}) == 20);
            CHECK(row.pct_diff == doctest::Approx(percent_difference(row.estimate, row.true_mean)));
        }
        REQUIRE(res.audit.size() == 3);
        for (const auto& a : res.audit) {
            CHECK(a.latest_selection_period <= a.period - delay);
            CHECK(a.latest_reveal_period <= a.period);
            CHECK(a.training_rows == static_cast<std::size_t>(a.period - delay + 1) * 20);
        }
    }
}

TEST_CASE("epsilon zero reproduces greedy in the harness") {
    const auto cfg = small_config();
    PolicyRun eps = policy(PolicyKind::epsilon_greedy);
    eps.policy.epsilon = 0.0;
    const auto g = run_seed(small_world(), cfg, policy(PolicyKind::greedy), 1);
    const auto e = run_seed(small_world(), cfg, eps, 1);
    CHECK(g.selected_ids == e.selected_ids);
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        CHECK(g.rows[i].reward_sum == e.rows[i].reward_sum);
        CHECK(g.rows[i].estimate == e.rows[i].estimate);
    }
}

TEST_CASE("seed pairing across policies") {
    const auto cfg = small_config();
    std::map<std::pair<std::uint64_t, int>, double> truth;
    for (auto k : {PolicyKind::greedy, PolicyKind::random, PolicyKind::abs}) {
        for (std::uint64_t s : cfg.seeds) {
            const auto r = run_seed(small_world(), cfg, policy(k), s);
            for (const auto* rows : {&r.warm_start_rows, &r.rows})
                for (const auto& row : *rows) {
                    auto [it, fresh] = truth.emplace(std::make_pair(s, row.year), row.true_mean);
                    if (!fresh) CHECK(it->second == row.true_mean);
                }
            // warm start draws do not depend on later periods
            CHECK(r.warm_start_rows.size() == 2);
        }
    }
}

TEST_CASE("random policy reward matches its expectation") {
    ExperimentConfig cfg = small_config();
    cfg.seeds = ExperimentConfig::default_seeds(200);
    double expected = 0.0;
    for (std::size_t y = 2; y < small_world().size(); ++y) {
        const auto r = small_world()[y].rewards();
        expected += static_cast<double>(cfg.budget) * mean(r);
    }
    std::vector<double> totals;
    for (std::uint64_t s : cfg.seeds) totals.push_back(run_seed(small_world(), cfg, policy(PolicyKind::random), s).cumulative_reward());
    const double se = sample_sd(totals) / std::sqrt(static_cast<double>(totals.size()));
    CHECK(std::abs(mean(totals) - expected) < 4.0 * se);
}

TEST_CASE("experiment aggregates, determinism and failure isolation") {
    auto cfg = small_config();
    cfg.seeds = {4, 9};
    const std::vector<PolicyRun> runs{policy(PolicyKind::greedy), policy(PolicyKind::random)};
    const auto a = run_experiment(small_world(), cfg, runs);
    cfg.jobs = 3;
    const auto b = run_experiment(small_world(), cfg, runs);
    REQUIRE(a.failures.empty());
    REQUIRE(a.aggregates.size() == 2);

    auto dump = [&](const ExperimentResult& r) {
        std::vector<ResultRow> rows;
        for (const auto& run : r.runs) rows.insert(rows.end(), run.rows.begin(), run.rows.end());
        std::ostringstream os;
        write_results_csv(os, rows, {});
        write_aggregate_csv(os, r.aggregates);
        return os.str();
    };
    CHECK(dump(a) == dump(b));

    for (const auto& agg : a.aggregates) {
        std::vector<double> per_seed;
        for (const auto& run : a.runs)
            if (run.policy == agg.policy) per_seed.push_back(run.cumulative_reward());
        REQUIRE(per_seed.size() == 2);
        CHECK(agg.r_mean == doctest::Approx(mean(per_seed)));
        CHECK(agg.r_std == doctest::Approx(std::abs(per_seed[0] - per_seed[1]) / std::sqrt(2.0)));
        CHECK(agg.seeds == 2);
    }
    CHECK(a.aggregates[0].r_mean >= a.aggregates[1].r_mean);

    cfg.model.kind = ModelKind::ridge;
    const auto c = run_experiment(small_world(), cfg, {policy(PolicyKind::greedy), policy(PolicyKind::ucb)});
    REQUIRE(c.failures.size() == 1);
    CHECK(c.failures[0].policy == "ucb");
    CHECK(c.failures[0].category == ErrorCategory::config);
    REQUIRE(c.aggregates.size() == 1);
    CHECK(c.aggregates[0].policy == "greedy");
}

TEST_CASE("configuration errors") {
    auto cfg = small_config();
    cfg.budget = 1000;
    CHECK_THROWS_AS(run_seed(small_world(), cfg, policy(PolicyKind::random), 0), Error);
    cfg = small_config();
    cfg.seeds = {1, 1};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = small_config();
    cfg.subsample_fraction = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK(parse_model_kind("rf") == ModelKind::forest);
    CHECK_THROWS_AS(parse_model_kind("svm"), Error);
}

TEST_CASE("overlap bands") {
    std::vector<PolicyAggregate> v(3);
    v[0].r_mean = 100, v[0].r_std = 10, v[0].seeds = 4;  // [90,110]
    v[1].r_mean = 95, v[1].r_std = 10, v[1].seeds = 4;   // [85,105]
    v[2].r_mean = 50, v[2].r_std = 10, v[2].seeds = 4;   // [40,60]
    mark_overlap_bands(v);
    CHECK(v[0].overlap_band);
    CHECK(v[1].overlap_band);
    CHECK_FALSE(v[2].overlap_band);
}

TEST_CASE("aggregation with one seed") {
    ResultRow r;
    r.policy = "p";
    r.params_digest = "d";
    r.year = 2008;
    r.reward_sum = 10;
    r.pct_diff = -3;
    const auto aggs = aggregate_rows({r});
    REQUIRE(aggs.size() == 1);
    CHECK(std::isnan(aggs[0].r_std));
    CHECK(std::isnan(aggs[0].sigma_pe));
    CHECK(aggs[0].mu_pe == 3.0);
    CHECK(aggs[0].rms_pe == 3.0);
}
