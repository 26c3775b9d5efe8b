#include "oeb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oeb/error.hpp"
#include "oeb/estimators.hpp"
#include "oeb/metrics.hpp"
#include "oeb/rng.hpp"

namespace oeb {

std::string to_string(ModelKind k) { return k == ModelKind::forest ? "forest" : "ridge"; }

ModelKind parse_model_kind(const std::string& s) {
    if (s == "forest" || s == "rf") return ModelKind::forest;
    if (s == "ridge" || s == "linear") return ModelKind::ridge;
    fail(ErrorCategory::config, "unknown model '" + s + "' (expected forest or ridge)");
}

std::string ModelSpec::canonical() const {
    if (kind == ModelKind::ridge) return fmt::format("model=ridge;lambda={}", ridge_lambda);
    return fmt::format("model=forest;trees={};depth={};leaf={};mtry={};bootstrap={};bins={}", forest.num_trees,
                       forest.max_depth, forest.min_samples_leaf, forest.features_per_split, forest.bootstrap ? 1 : 0,
                       forest.max_bins);
}

std::vector<std::uint64_t> ExperimentConfig::default_seeds(std::size_t n) {
    std::vector<std::uint64_t> s(n);
    std::iota(s.begin(), s.end(), std::uint64_t{0});
    return s;
}

void ExperimentConfig::validate() const {
    require(budget >= 1, ErrorCategory::config, "budget must be positive");
    require(delay >= 1, ErrorCategory::config, "delay must be at least one period");
    require(subsample_fraction > 0.0 && subsample_fraction <= 1.0, ErrorCategory::config,
            "subsample fraction must be in (0, 1]");
    require(warm_start_periods >= 0, ErrorCategory::config, "warm-start periods must be non-negative");
    require(!seeds.empty(), ErrorCategory::config, "at least one seed is required");
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCategory::config,
            "seeds must be distinct");
    require(jobs >= 1, ErrorCategory::config, "jobs must be at least 1");
}

std::string ExperimentConfig::canonical() const {
    std::string seed_list;
    for (std::size_t i = 0; i < seeds.size(); ++i) seed_list += (i ? ";" : "") + std::to_string(seeds[i]);
    return fmt::format("budget={};delay={};fraction={};warm_start={};master_seed={};{};lda_shrinkage={};"
                       "weighted_fit={};winsorize={};cutoff={};seeds={}",
                       budget, delay, subsample_fraction, warm_start_periods, master_seed, model.canonical(),
                       model.lda_shrinkage, weighted_fit ? 1 : 0, winsorize ? 1 : 0, no_change_cutoff, seed_list);
}

Currency RunResult::cumulative_reward() const {
    std::vector<double> sums;
    for (const ResultRow& r : rows) sums.push_back(r.reward_sum);
    return oeb::cumulative_reward(sums);
}

double nearest_rank_percentile(std::span<const double> values, double pct) {
    require(!values.empty(), ErrorCategory::data, "percentile of an empty set");
    require(pct > 0.0 && pct <= 100.0, ErrorCategory::config, "percentile must be in (0, 100]");
    std::vector<double> v(values.begin(), values.end());
    const double exact = pct / 100.0 * static_cast<double>(v.size());
    // Guard against 0.99 * 100 landing a hair above 99.
    std::size_t rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
    return v[rank - 1];
}

std::vector<double> winsorize(std::span<const double> rewards, double upper_pct, double lower_floor) {
    require(!rewards.empty(), ErrorCategory::data, "winsorize of an empty vector");
    const double cap = nearest_rank_percentile(rewards, upper_pct);
    std::vector<double> out(rewards.begin(), rewards.end());
    for (double& r : out) r = std::max(lower_floor, std::min(r, cap));
    return out;
}

PopulationYear subsample_population(const PopulationYear& full_year, double fraction, std::uint64_t seed,
                                    std::uint64_t master_seed) {
    require(fraction > 0.0 && fraction <= 1.0, ErrorCategory::config, "subsample fraction must be in (0, 1]");
    const std::size_t n = full_year.size();
    const auto keep = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    if (keep == n) return full_year;
    RngStream rng = RngStream(master_seed).derive("subsample").derive(seed).derive(static_cast<std::uint64_t>(full_year.year()));
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t k = 0; k < keep; ++k) std::swap(pool[k], pool[k + rng.index(n - k)]);
    pool.resize(keep);
    std::sort(pool.begin(), pool.end());
    std::vector<ArmRecord> arms;
    arms.reserve(keep);
    for (std::size_t i : pool) arms.push_back(full_year[i]);
    return PopulationYear(full_year.year(), std::move(arms));
}

std::string params_digest(const ExperimentConfig& config, const PolicyRun& run) {
    const bool weighted = run.weighted_fit.value_or(config.weighted_fit);
    const std::string s = fmt::format("{}|{}|lda_shrinkage={}|weighted_fit={}|winsorize={}|budget={}",
                                      run.policy.canonical(), config.model.canonical(), config.model.lda_shrinkage,
                                      weighted ? 1 : 0, config.winsorize ? 1 : 0, config.budget);
    return fmt::format("{:016x}", fnv1a64(s));
}

namespace {

struct TrainingRow {
    std::vector<double> features;
    double reward = 0.0;
    double weight = 1.0;
    int selection_period = 0;
    int reveal_period = 0;
};

struct PendingPile {
    int reveal_period = 0;
    RewardPile pile;
};

class RegressionModel {
public:
    void fit(ModelSpec const& spec, const TrainingSet& data, const RngStream& rng) {
        kind_ = spec.kind;
        if (kind_ == ModelKind::forest) forest_ = fit_forest(data, spec.forest, rng);
        else ridge_ = fit_ridge(data, spec.ridge_lambda);
    }

    void predict(const PopulationYear& pop, std::vector<double>& means, std::vector<double>* dispersions) const {
        means.resize(pop.size());
        if (dispersions) dispersions->resize(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (kind_ == ModelKind::forest) {
                const ForestPrediction p = forest_.predict_with_dispersion(pop[i].features);
                means[i] = p.mean;
                if (dispersions) (*dispersions)[i] = p.dispersion;
            } else {
                means[i] = ridge_.predict(pop[i].features);
                if (dispersions) (*dispersions)[i] = 0.0;
            }
        }
    }

private:
    ModelKind kind_ = ModelKind::forest;
    ForestModel forest_;
    RidgeModel ridge_;
};

std::size_t class_count(const std::vector<PopulationYear>& pops) {
    int mx = 0;
    for (const PopulationYear& p : pops)
        for (const ArmRecord& a : p.arms()) {
            require(a.stratum_class >= 0, ErrorCategory::data, "stratum class labels must be non-negative");
            mx = std::max(mx, a.stratum_class);
        }
    return static_cast<std::size_t>(mx) + 1;
}

}  // namespace

RunResult run_seed(const std::vector<PopulationYear>& populations, const ExperimentConfig& config,
                   const PolicyRun& run, std::uint64_t seed) {
    config.validate();
    run.policy.validate();
    require(!populations.empty(), ErrorCategory::data, "no populations to run on");
    const PolicySpec& policy = run.policy;
    require(!(policy.kind == PolicyKind::ucb && config.model.kind != ModelKind::forest), ErrorCategory::config,
            "UCB needs the forest model (tree dispersion)");

    RunResult result;
    result.policy = policy.name();
    result.params_digest = params_digest(config, run);
    result.seed = seed;

    const std::size_t n_classes = class_count(populations);
    const std::size_t budget = config.budget;
    const bool weighted = run.weighted_fit.value_or(config.weighted_fit);
    const RngStream policy_rng =
        RngStream(config.master_seed).derive("policy").derive(policy.canonical()).derive(seed);
    // Shared across policies so identical histories give identical fits.
    const RngStream model_rng = RngStream(config.master_seed).derive("model").derive(seed);
    const RngStream warm_rng = RngStream(config.master_seed).derive("warm").derive(seed);

    std::vector<PopulationYear> offered;
    offered.reserve(populations.size());
    for (const PopulationYear& full : populations) {
        offered.push_back(subsample_population(full, config.subsample_fraction, seed, config.master_seed));
        require(budget <= offered.back().size(), ErrorCategory::infeasible,
                fmt::format("budget {} exceeds the {} arms offered in year {}", budget, offered.back().size(),
                            full.year()));
    }

    std::vector<TrainingRow> history;
    std::vector<PendingPile> pending;
    const std::size_t nf = offered.front().num_features();

    for (std::size_t k = 0; k < offered.size(); ++k) {
        const int period = static_cast<int>(k);
        const PopulationYear& pop = offered[k];

        // (1) reveal piles due now
        for (auto it = pending.begin(); it != pending.end();) {
            if (it->reveal_period == period) {
                for (const RevealedOutcome& o : it->pile.outcomes)
                    history.push_back({o.features, o.true_reward, o.weight,
                                       it->reveal_period - config.delay, it->reveal_period});
                it = pending.erase(it);
            } else {
                ++it;
            }
        }

        // (2) select
        SelectionBatch batch;
        std::vector<double> predictions;
        std::optional<Currency> model_estimate;
        const bool warm = period < config.warm_start_periods;
        RngStream select_rng = policy_rng.derive("select").derive(static_cast<std::uint64_t>(period));
        if (warm) {
            RngStream r = warm_rng.derive(static_cast<std::uint64_t>(period));
            batch = select_random(pop.size(), budget, r);
        } else if (policy.kind == PolicyKind::random) {
            batch = select_random(pop.size(), budget, select_rng);
        } else {
            require(!history.empty(), ErrorCategory::model,
                    fmt::format("period {} (year {}): no revealed rewards to fit a model on", period, pop.year()));
            AuditEntry audit{period, history.size(), -1, -1};
            for (const TrainingRow& r : history) {
                audit.latest_selection_period = std::max(audit.latest_selection_period, r.selection_period);
                audit.latest_reveal_period = std::max(audit.latest_reveal_period, r.reveal_period);
            }
            require(audit.latest_reveal_period <= period && audit.latest_selection_period <= period - config.delay,
                    ErrorCategory::internal, fmt::format("information leak at period {}", period));
            result.audit.push_back(audit);

            TrainingSet train(nf, weighted);
            for (const TrainingRow& r : history) train.add(r.features, r.reward, r.weight);
            if (config.winsorize) train.set_targets(winsorize(train.targets()));

            try {
                RegressionModel model;
                model.fit(config.model, train, model_rng.derive(static_cast<std::uint64_t>(period)));
                std::vector<double> dispersions;
                model.predict(pop, predictions, policy.kind == PolicyKind::ucb ? &dispersions : nullptr);

                switch (policy.kind) {
                    case PolicyKind::greedy: batch = select_greedy(predictions, budget); break;
                    case PolicyKind::epsilon_greedy:
                        batch = select_epsilon_greedy(predictions, budget, policy.epsilon, select_rng);
                        break;
                    case PolicyKind::ucb: batch = select_ucb(predictions, dispersions, policy.ucb_z, budget); break;
                    case PolicyKind::lda_rank: {
                        const LdaModel lda = fit_lda(train, config.no_change_cutoff, config.model.lda_shrinkage);
                        std::vector<double> scores(pop.size());
                        for (std::size_t i = 0; i < pop.size(); ++i) scores[i] = lda.score(pop[i].features);
                        batch = select_lda_rank(scores, budget);
                        break;
                    }
                    case PolicyKind::abs:
                        batch = select_abs(predictions, policy.abs_params(budget), budget, select_rng);
                        break;
                    case PolicyKind::random: break;
                }
                if (policy.kind != PolicyKind::abs) model_estimate = model_based_estimate(predictions, pop);
            } catch (const Error& e) {
                throw Error(e.category(), fmt::format("period {} (year {}): {}", period, pop.year(), e.what()));
            }
        }
        batch.year = pop.year();
        validate_batch(batch, pop.size(), budget);

        // (3) enqueue rewards
        if (k + static_cast<std::size_t>(config.delay) < offered.size())
            pending.push_back({period + config.delay, make_reward_pile(pop, batch, config.delay)});

        // (4) estimate
        const std::vector<double> rewards = pop.rewards(), weights = pop.weights();
        ResultRow row;
        row.seed = seed;
        row.year = pop.year();
        row.policy = result.policy;
        row.params_digest = result.params_digest;
        row.true_mean = weighted_population_mean(pop);
        row.estimate = model_estimate ? *model_estimate : ht_estimate(batch, rewards, weights, pop.total_weight());
        row.pct_diff = percent_difference(row.estimate, row.true_mean);
        std::vector<double> batch_rewards, batch_tpi;
        row.class_hist.assign(n_classes, 0);
        for (std::size_t i : batch.selected) {
            batch_rewards.push_back(pop[i].true_reward);
            batch_tpi.push_back(pop[i].tpi);
            ++row.class_hist[static_cast<std::size_t>(pop[i].stratum_class)];
        }
        row.reward_sum = std::accumulate(batch_rewards.begin(), batch_rewards.end(), 0.0);
        row.n_selected = batch.size();
        row.no_change_rate = batch_rewards.empty() ? 0.0 : no_change_rate(batch_rewards, config.no_change_cutoff);
        row.avg_tpi = batch_tpi.empty() ? 0.0 : mean(batch_tpi);
        if (!warm && policy.kind == PolicyKind::epsilon_greedy) {
            if (!batch.random_picks.empty()) row.eps_estimate = epsilon_sample_estimate(batch, rewards, weights);
            else spdlog::debug("{} seed {} year {}: empty epsilon sample", result.policy, seed, pop.year());
        }

        std::vector<ArmId> ids;
        for (std::size_t i : batch.selected) ids.push_back(pop[i].id);
        result.selected_ids.push_back(std::move(ids));
        (warm ? result.warm_start_rows : result.rows).push_back(std::move(row));
    }
    return result;
}

std::vector<PolicyAggregate> aggregate_rows(const std::vector<ResultRow>& rows) {
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<const ResultRow*>> groups;
    for (const ResultRow& r : rows) {
        auto key = std::make_pair(r.policy, r.params_digest);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(&r);
    }

    std::vector<PolicyAggregate> out;
    for (const auto& key : keys) {
        const auto& g = groups[key];
        std::map<std::uint64_t, double> reward_by_seed;
        std::map<std::uint64_t, std::map<int, double>> pd;
        std::vector<double> nr;
        std::vector<int> years;
        for (const ResultRow* r : g) {
            reward_by_seed[r->seed] += r->reward_sum;
            pd[r->seed][r->year] = r->pct_diff;
            nr.push_back(r->no_change_rate);
            years.push_back(r->year);
        }
        std::sort(years.begin(), years.end());
        years.erase(std::unique(years.begin(), years.end()), years.end());

        PolicyAggregate a;
        a.policy = key.first;
        a.params_digest = key.second;
        a.seeds = reward_by_seed.size();
        std::vector<double> rewards;
        for (const auto& [s, v] : reward_by_seed) rewards.push_back(v);
        a.r_mean = mean(rewards);
        a.r_std = rewards.size() >= 2 ? sample_sd(rewards) : std::nan("");
        a.mu_nr = mean(nr);

        SeedYearMatrix m(pd.size(), years.size(), std::nan(""));
        std::size_t si = 0;
        for (const auto& [s, by_year] : pd) {
            for (const auto& [y, v] : by_year)
                m(si, static_cast<std::size_t>(std::lower_bound(years.begin(), years.end(), y) - years.begin())) = v;
            ++si;
        }
        for (double v : m.values())
            require(!std::isnan(v), ErrorCategory::data,
                    "results for " + a.policy + " are not rectangular over seeds x years");
        if (m.seeds() >= 2) {
            const PeStatistics pe = pe_statistics(m);
            a.mu_pe = pe.mu_pe;
            a.sigma_pe = pe.sigma_pe;
            a.rms_pe = pe.rms_pe;
        } else {
            double sq = 0.0;
            for (double v : m.values()) sq += v * v;
            a.mu_pe = std::abs(mean(m.values()));
            a.sigma_pe = std::nan("");
            a.rms_pe = std::sqrt(sq / static_cast<double>(m.values().size()));
        }
        out.push_back(a);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PolicyAggregate& x, const PolicyAggregate& y) { return x.r_mean > y.r_mean; });
    mark_overlap_bands(out);
    return out;
}

void mark_overlap_bands(std::vector<PolicyAggregate>& aggs) {
    auto interval = [](const PolicyAggregate& a) {
        const double se = std::isnan(a.r_std) ? 0.0 : a.r_std / std::sqrt(static_cast<double>(a.seeds));
        return std::make_pair(a.r_mean - 2.0 * se, a.r_mean + 2.0 * se);
    };
    for (auto& a : aggs) a.overlap_band = false;
    for (std::size_t i = 0; i + 1 < aggs.size(); ++i) {
        const auto [lo1, hi1] = interval(aggs[i]);
        const auto [lo2, hi2] = interval(aggs[i + 1]);
        if (lo1 <= hi2 && lo2 <= hi1) aggs[i].overlap_band = aggs[i + 1].overlap_band = true;
    }
}

ExperimentResult run_experiment(const std::vector<PopulationYear>& populations, const ExperimentConfig& config,
                                const std::vector<PolicyRun>& runs) {
    config.validate();
    require(!runs.empty(), ErrorCategory::config, "no policies to run");
    const std::size_t n_seeds = config.seeds.size();
    const std::size_t n_tasks = runs.size() * n_seeds;

    std::vector<std::optional<RunResult>> slots(n_tasks);
    std::vector<std::optional<PolicyFailure>> errors(n_tasks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) {
            const PolicyRun& run = runs[t / n_seeds];
            const std::uint64_t seed = config.seeds[t % n_seeds];
            try {
                slots[t] = run_seed(populations, config, run, seed);
                spdlog::info("finished {} seed {}", run.policy.name(), seed);
            } catch (const Error& e) {
                errors[t] = PolicyFailure{run.policy.name(), e.category(), fmt::format("seed {}: {}", seed, e.what())};
            } catch (const std::exception& e) {
                errors[t] = PolicyFailure{run.policy.name(), ErrorCategory::internal,
                                          fmt::format("seed {}: {}", seed, e.what())};
            }
        }
    };
    const std::size_t threads = std::min(config.jobs, n_tasks);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ExperimentResult result;
    for (std::size_t p = 0; p < runs.size(); ++p) {
        std::optional<PolicyFailure> first_error;
        for (std::size_t s = 0; s < n_seeds && !first_error; ++s) first_error = errors[p * n_seeds + s];
        if (first_error) {
            spdlog::debug("{} aborted: {}", first_error->policy, first_error->message);
            result.failures.push_back(*first_error);
            continue;
        }
        std::vector<ResultRow> rows;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            RunResult& r = *slots[p * n_seeds + s];
            rows.insert(rows.end(), r.rows.begin(), r.rows.end());
            result.runs.push_back(std::move(r));
        }
        if (!rows.empty()) {
            auto aggs = aggregate_rows(rows);
            result.aggregates.insert(result.aggregates.end(), aggs.begin(), aggs.end());
        }
    }
    std::stable_sort(result.aggregates.begin(), result.aggregates.end(),
                     [](const PolicyAggregate& a, const PolicyAggregate& b) { return a.r_mean > b.r_mean; });
    mark_overlap_bands(result.aggregates);
    return result;
}

}  // namespace oeb
