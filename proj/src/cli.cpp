#include "oeb/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "oeb/data_io.hpp"
#include "oeb/error.hpp"
#include "oeb/log.hpp"
#include "oeb/results_io.hpp"
#include "oeb/rng.hpp"

#ifndef OEB_VERSION
#define OEB_VERSION "dev"
#endif

namespace oeb::cli {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    s.erase(0, b);
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_value(const std::string& raw, const std::string& key) {
    const std::string v = trim(raw);
    if constexpr (std::is_same_v<T, std::string>) {
        return v;
    } else if constexpr (std::is_same_v<T, bool>) {
        std::string l = v;
        std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
        if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
        if (l == "0" || l == "false" || l == "no" || l == "off") return false;
        fail(ErrorCategory::config, key + ": expected a boolean, got '" + v + "'");
    } else {
        T out{};
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
            fail(ErrorCategory::config, key + ": cannot parse '" + v + "'");
        return out;
    }
}

// Flag beats config-file key beats the existing (default) value.
template <typename T>
void pick(T& dst, const std::optional<T>& flag, const ConfigFile& file, const std::string& key) {
    if (flag) dst = *flag;
    else if (auto v = file.get(key)) dst = parse_value<T>(*v, key);
}

const std::set<std::string> kKnownKeys = {
    "io.data", "io.out",
    "experiment.budget", "experiment.fraction", "experiment.delay", "experiment.warm-start", "experiment.seeds",
    "experiment.master-seed", "experiment.weighted-fit", "experiment.winsorize", "experiment.jobs",
    "experiment.no-change-cutoff",
    "model.kind", "model.trees", "model.max-depth", "model.min-leaf", "model.mtry-frac", "model.ridge-lambda",
    "model.lda-shrinkage",
    "policy.policy", "policy.epsilon", "policy.ucb-z", "policy.alpha", "policy.zeta-frac", "policy.trim",
    "policy.smoothing", "policy.strata",
    "synthetic.kind", "synthetic.seed", "synthetic.years", "synthetic.first-year", "synthetic.arms-per-year",
    "synthetic.features", "synthetic.drift", "synthetic.noncompliance-scale", "synthetic.noncompliance-intercept",
};

struct IoFlags {
    std::optional<std::string> config, data, out;
};

struct ExperimentFlags {
    std::optional<std::size_t> budget, jobs;
    std::optional<int> trees, max_depth, min_leaf;
    std::optional<double> fraction, mtry_frac, ridge_lambda, lda_shrinkage, cutoff;
    std::optional<int> delay, warm_start;
    std::optional<std::string> seeds, model;
    std::optional<std::uint64_t> master_seed;
    std::optional<bool> weighted_fit, winsorize;
};

struct PolicyFlags {
    std::optional<std::string> policy, smoothing;
    std::optional<double> epsilon, ucb_z, alpha, zeta_frac, trim;
    std::optional<std::size_t> strata;
};

struct SweepFlags {
    std::optional<std::string> alpha, zeta_frac, trim, smoothing, strata;
};

struct SyntheticFlags {
    std::optional<std::string> kind;
    std::optional<std::uint64_t> seed;
    std::optional<int> years, first_year, arms_per_year, features;
    std::optional<double> drift, nc_scale, nc_intercept;
};

void add_io(CLI::App& app, IoFlags& f, bool needs_data) {
    app.add_option("--config", f.config, "key = value config file with [section] headers");
    if (needs_data) app.add_option("--data", f.data, "population CSV");
    app.add_option("--out", f.out, "output path");
}

void add_experiment(CLI::App& app, ExperimentFlags& f) {
    app.add_option("--budget", f.budget, "arms selected per period (K)");
    app.add_option("--fraction", f.fraction, "per-seed subsample fraction");
    app.add_option("--delay", f.delay, "reward delay in periods");
    app.add_option("--warm-start", f.warm_start, "random warm-start periods");
    app.add_option("--seeds", f.seeds, "seed count N (0..N-1) or comma list");
    app.add_option("--master-seed", f.master_seed);
    app.add_option("--weighted-fit", f.weighted_fit, "fit reward models with sample weights");
    app.add_option("--winsorize", f.winsorize, "winsorize revealed rewards before each fit");
    app.add_option("--jobs", f.jobs, "parallel (policy, seed) runs");
    app.add_option("--no-change-cutoff", f.cutoff);
    app.add_option("--model", f.model, "forest or ridge");
    app.add_option("--trees", f.trees);
    app.add_option("--max-depth", f.max_depth);
    app.add_option("--min-leaf", f.min_leaf);
    app.add_option("--mtry-frac", f.mtry_frac);
    app.add_option("--ridge-lambda", f.ridge_lambda);
    app.add_option("--lda-shrinkage", f.lda_shrinkage);
}

ExperimentConfig build_experiment(const ExperimentFlags& f, const ConfigFile& file) {
    ExperimentConfig c;
    pick(c.budget, f.budget, file, "experiment.budget");
    pick(c.subsample_fraction, f.fraction, file, "experiment.fraction");
    pick(c.delay, f.delay, file, "experiment.delay");
    pick(c.warm_start_periods, f.warm_start, file, "experiment.warm-start");
    pick(c.master_seed, f.master_seed, file, "experiment.master-seed");
    pick(c.weighted_fit, f.weighted_fit, file, "experiment.weighted-fit");
    pick(c.winsorize, f.winsorize, file, "experiment.winsorize");
    pick(c.jobs, f.jobs, file, "experiment.jobs");
    pick(c.no_change_cutoff, f.cutoff, file, "experiment.no-change-cutoff");
    std::string seeds = std::to_string(c.seeds.size());
    pick(seeds, f.seeds, file, "experiment.seeds");
    c.seeds = parse_seed_spec(seeds);

    std::string model = to_string(c.model.kind);
    pick(model, f.model, file, "model.kind");
    c.model.kind = parse_model_kind(model);
    pick(c.model.forest.num_trees, f.trees, file, "model.trees");
    pick(c.model.forest.max_depth, f.max_depth, file, "model.max-depth");
    pick(c.model.forest.min_samples_leaf, f.min_leaf, file, "model.min-leaf");
    pick(c.model.forest.features_per_split, f.mtry_frac, file, "model.mtry-frac");
    pick(c.model.ridge_lambda, f.ridge_lambda, file, "model.ridge-lambda");
    pick(c.model.lda_shrinkage, f.lda_shrinkage, file, "model.lda-shrinkage");
    c.validate();
    return c;
}

void add_policy(CLI::App& app, PolicyFlags& f) {
    app.add_option("--policy", f.policy, "comma list of greedy, eps, ucb, random, lda, abs; or 'table2'");
    app.add_option("--epsilon", f.epsilon);
    app.add_option("--ucb-z", f.ucb_z);
    app.add_option("--alpha", f.alpha);
    app.add_option("--zeta-frac", f.zeta_frac);
    app.add_option("--trim", f.trim);
    app.add_option("--smoothing", f.smoothing, "logistic or exponential");
    app.add_option("--strata", f.strata);
}

std::vector<PolicyRun> build_policies(const PolicyFlags& f, const ConfigFile& file) {
    std::string names = "greedy";
    pick(names, f.policy, file, "policy.policy");
    PolicySpec base;
    pick(base.epsilon, f.epsilon, file, "policy.epsilon");
    pick(base.ucb_z, f.ucb_z, file, "policy.ucb-z");
    pick(base.alpha, f.alpha, file, "policy.alpha");
    pick(base.zeta_fraction, f.zeta_frac, file, "policy.zeta-frac");
    pick(base.trim, f.trim, file, "policy.trim");
    pick(base.num_strata, f.strata, file, "policy.strata");
    std::string smoothing = to_string(base.smoothing);
    pick(smoothing, f.smoothing, file, "policy.smoothing");
    base.smoothing = parse_smoothing(smoothing);

    std::vector<PolicyRun> runs;
    std::set<std::string> seen;
    auto add = [&](PolicyRun r) {
        r.policy.validate();
        if (seen.insert(r.policy.name() + "|" + r.policy.canonical()).second) runs.push_back(std::move(r));
    };
    for (const std::string& name : split_list(names)) {
        if (name == "table2") {
            for (PolicyRun& r : table2_policies()) add(std::move(r));
            continue;
        }
        PolicySpec p = base;
        p.kind = parse_policy_kind(name);
        add({p, std::nullopt});
    }
    require(!runs.empty(), ErrorCategory::usage, "no policy given");
    return runs;
}

std::vector<PolicyRun> build_sweep(const SweepFlags& f, const PolicyFlags& single, const ConfigFile& file) {
    PolicySpec base;
    base.kind = PolicyKind::abs;
    pick(base.alpha, single.alpha, file, "policy.alpha");
    pick(base.zeta_fraction, single.zeta_frac, file, "policy.zeta-frac");
    pick(base.trim, single.trim, file, "policy.trim");
    pick(base.num_strata, single.strata, file, "policy.strata");
    std::string sm = to_string(base.smoothing);
    pick(sm, single.smoothing, file, "policy.smoothing");

    auto grid = [](const std::optional<std::string>& flag, const std::string& fallback, const char* what) {
        const std::vector<std::string> v = split_list(flag ? *flag : fallback);
        require(!v.empty(), ErrorCategory::usage, fmt::format("empty grid: no values for {}", what));
        return v;
    };
    auto num = [](double v) { return fmt::format("{}", v); };
    const auto alphas = grid(f.alpha, num(base.alpha), "alpha");
    const auto zetas = grid(f.zeta_frac, num(base.zeta_fraction), "zeta-frac");
    const auto trims = grid(f.trim, num(base.trim), "trim");
    const auto smooths = grid(f.smoothing, sm, "smoothing");
    const auto stratas = grid(f.strata, std::to_string(base.num_strata), "strata");

    std::vector<PolicyRun> runs;
    std::set<std::string> seen;
    for (const auto& a : alphas)
        for (const auto& z : zetas)
            for (const auto& t : trims)
                for (const auto& s : smooths)
                    for (const auto& h : stratas) {
                        PolicySpec p = base;
                        p.alpha = parse_value<double>(a, "alpha");
                        p.zeta_fraction = parse_value<double>(z, "zeta-frac");
                        p.trim = parse_value<double>(t, "trim");
                        p.smoothing = parse_smoothing(s);
                        p.num_strata = parse_value<std::size_t>(h, "strata");
                        p.validate();
                        if (!seen.insert(p.canonical()).second) continue;
                        p.label = fmt::format("abs[a={};z={};t={};s={};h={}]", p.alpha, p.zeta_fraction, p.trim,
                                              p.smoothing == Smoothing::exponential ? "exp" : "log", p.num_strata);
                        runs.push_back({p, std::nullopt});
                    }
    return runs;
}

ConfigFile load_optional(const std::optional<std::string>& path) {
    ConfigFile file = path ? ConfigFile::load(*path) : ConfigFile{};
    for (const auto& [k, v] : file.values())
        require(kKnownKeys.count(k) > 0, ErrorCategory::config, "config: unknown key '" + k + "'");
    return file;
}

std::vector<PopulationYear> load_data(const IoFlags& io, const ConfigFile& file) {
    std::string path;
    pick(path, io.data, file, "io.data");
    require(!path.empty(), ErrorCategory::usage, "--data is required");
    return load_csv(path);
}

std::filesystem::path out_path(const IoFlags& io, const ConfigFile& file, const std::string& fallback) {
    std::string p = fallback;
    pick(p, io.out, file, "io.out");
    return p;
}

std::filesystem::path aggregate_path(std::filesystem::path results) {
    return results.replace_extension(".agg.csv");
}

int execute(const ExperimentConfig& config, const std::vector<PolicyRun>& runs,
            const std::vector<PopulationYear>& pops, const std::filesystem::path& out_file, std::ostream& out,
            std::ostream& err) {
    const ExperimentResult result = run_experiment(pops, config, runs);
    std::vector<ResultRow> rows;
    for (const RunResult& r : result.runs) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    write_results_csv(out_file, rows, run_metadata(config, runs));
    write_aggregate_csv(aggregate_path(out_file), result.aggregates);
    print_aggregate_table(out, result.aggregates);
    for (const PolicyFailure& f : result.failures)
        fmt::print(err, "error: {}: {}: {}\n", category_name(f.category), f.policy, f.message);
    return result.failures.empty() ? 0 : static_cast<int>(result.failures.front().category);
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
    ConfigFile file;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            require(line.back() == ']' && line.size() > 2, ErrorCategory::config,
                    fmt::format("{}:{}: malformed section header", source, lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCategory::config, fmt::format("{}:{}: expected key = value", source, lineno));
        require(!section.empty(), ErrorCategory::config, fmt::format("{}:{}: key outside a [section]", source, lineno));
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), ErrorCategory::config, fmt::format("{}:{}: empty key", source, lineno));
        file.values_[section + "." + key] = trim(line.substr(eq + 1));
    }
    return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCategory::io, "cannot open config '" + path.string() + "'");
    return parse(in, path.string());
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
    const std::string s = trim(spec);
    if (s.find(',') == std::string::npos) {
        const auto n = parse_value<std::size_t>(s, "seeds");
        require(n >= 1, ErrorCategory::config, "seeds: need at least one");
        return ExperimentConfig::default_seeds(n);
    }
    std::vector<std::uint64_t> out;
    for (const std::string& item : split_list(s)) out.push_back(parse_value<std::uint64_t>(item, "seeds"));
    return out;
}

std::vector<PolicyRun> table2_policies() {
    auto make = [](const char* label, PolicyKind kind) {
        PolicySpec p;
        p.kind = kind;
        p.label = label;
        return p;
    };
    PolicySpec greedy = make("greedy", PolicyKind::greedy);
    PolicySpec ucb1 = make("ucb-1", PolicyKind::ucb);
    ucb1.ucb_z = 1.0;
    PolicySpec abs1 = make("abs-1", PolicyKind::abs);
    abs1.smoothing = Smoothing::exponential;
    abs1.alpha = 5.0;
    abs1.zeta_fraction = 0.8;
    abs1.trim = 0.025;
    PolicySpec eps = make("eps-greedy", PolicyKind::epsilon_greedy);
    eps.epsilon = 0.1;
    PolicySpec ucb2 = make("ucb-2", PolicyKind::ucb);
    ucb2.ucb_z = 10.0;
    PolicySpec abs2 = make("abs-2", PolicyKind::abs);
    abs2.smoothing = Smoothing::logistic;
    abs2.alpha = 0.5;
    abs2.zeta_fraction = 0.8;
    abs2.trim = 0.05;
    PolicySpec random = make("random", PolicyKind::random);
    return {{greedy, true}, {ucb1, true}, {abs1, false}, {eps, true}, {ucb2, true}, {abs2, false}, {random, true}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    init_logging();
    CLI::App app{"Optimize-and-estimate structured bandit simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", OEB_VERSION);

    IoFlags gen_io, run_io, sweep_io, drift_io;
    ExperimentFlags run_exp, sweep_exp;
    PolicyFlags run_pol, sweep_single;
    SweepFlags sweep_grid;
    SyntheticFlags syn;
    std::vector<std::string> summarize_in;
    std::optional<std::string> summarize_out;

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic population CSV and a manifest");
    add_io(*gen, gen_io, false);
    gen->add_option("--kind", syn.kind, "synthetic (default) or interaction");
    gen->add_option("--seed", syn.seed);
    gen->add_option("--years", syn.years);
    gen->add_option("--first-year", syn.first_year);
    gen->add_option("--arms-per-year", syn.arms_per_year);
    gen->add_option("--features", syn.features);
    gen->add_option("--drift", syn.drift, "per-year covariate shift");
    gen->add_option("--noncompliance-scale", syn.nc_scale);
    gen->add_option("--noncompliance-intercept", syn.nc_intercept);

    CLI::App* runc = app.add_subcommand("run", "run policies over all seeds");
    add_io(*runc, run_io, true);
    add_experiment(*runc, run_exp);
    add_policy(*runc, run_pol);

    CLI::App* sweep = app.add_subcommand("sweep", "ABS hyperparameter grid (comma lists)");
    add_io(*sweep, sweep_io, true);
    add_experiment(*sweep, sweep_exp);
    sweep->add_option("--alpha", sweep_grid.alpha);
    sweep->add_option("--zeta-frac", sweep_grid.zeta_frac);
    sweep->add_option("--trim", sweep_grid.trim);
    sweep->add_option("--smoothing", sweep_grid.smoothing);
    sweep->add_option("--strata", sweep_grid.strata);

    CLI::App* summarize = app.add_subcommand("summarize", "aggregate one or more results files");
    summarize->add_option("--in,inputs", summarize_in, "results CSV files")->required();
    summarize->add_option("--out", summarize_out, "aggregate CSV path");

    CLI::App* drift = app.add_subcommand("drift", "per-year summary with covariate drift");
    add_io(*drift, drift_io, true);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::Success& e) {
            return app.exit(e, out, err);
        } catch (const CLI::ParseError& e) {
            fmt::print(err, "error: usage: {}\n", e.what());
            return static_cast<int>(ErrorCategory::usage);
        }

        if (*gen) {
            const ConfigFile file = load_optional(gen_io.config);
            std::string kind = "synthetic";
            pick(kind, syn.kind, file, "synthetic.kind");
            std::vector<PopulationYear> pops;
            nlohmann::ordered_json manifest;
            manifest["artifact_version"] = OEB_VERSION;
            manifest["created_utc"] = utc_timestamp();
            manifest["kind"] = kind;
            if (kind == "synthetic") {
                SyntheticConfig c;
                pick(c.seed, syn.seed, file, "synthetic.seed");
                pick(c.num_years, syn.years, file, "synthetic.years");
                pick(c.first_year, syn.first_year, file, "synthetic.first-year");
                pick(c.arms_per_year, syn.arms_per_year, file, "synthetic.arms-per-year");
                pick(c.num_features, syn.features, file, "synthetic.features");
                pick(c.drift_rate, syn.drift, file, "synthetic.drift");
                pick(c.noncompliance_scale, syn.nc_scale, file, "synthetic.noncompliance-scale");
                pick(c.noncompliance_intercept, syn.nc_intercept, file, "synthetic.noncompliance-intercept");
                pops = generate_synthetic(c);
                manifest["config"] = {{"seed", c.seed},
                                      {"years", c.num_years},
                                      {"first_year", c.first_year},
                                      {"arms_per_year", c.arms_per_year},
                                      {"features", c.num_features},
                                      {"classes", c.num_classes},
                                      {"class_weight_levels", c.class_weight_levels},
                                      {"noncompliance_scale", c.noncompliance_scale},
                                      {"noncompliance_intercept", c.noncompliance_intercept},
                                      {"reward_log_base", c.reward_log_base},
                                      {"reward_tpi_elasticity", c.reward_tpi_elasticity},
                                      {"reward_log_sd_base", c.reward_log_sd_base},
                                      {"reward_log_sd_tpi_slope", c.reward_log_sd_tpi_slope},
                                      {"drift_rate", c.drift_rate}};
            } else if (kind == "interaction") {
                InteractionTaskConfig c;
                pick(c.seed, syn.seed, file, "synthetic.seed");
                pick(c.num_years, syn.years, file, "synthetic.years");
                pick(c.first_year, syn.first_year, file, "synthetic.first-year");
                pick(c.arms_per_year, syn.arms_per_year, file, "synthetic.arms-per-year");
                pick(c.num_features, syn.features, file, "synthetic.features");
                pops = generate_interaction_task(c);
                manifest["config"] = {{"seed", c.seed},         {"years", c.num_years},
                                      {"first_year", c.first_year}, {"arms_per_year", c.arms_per_year},
                                      {"features", c.num_features}, {"interaction", c.interaction},
                                      {"linear", c.linear},         {"noise_sd", c.noise_sd}};
            } else {
                fail(ErrorCategory::config, "unknown data kind '" + kind + "' (synthetic or interaction)");
            }
            const std::filesystem::path path = out_path(gen_io, file, "population.csv");
            std::ostringstream csv;
            write_csv(csv, pops);
            {
                std::ofstream f(path, std::ios::binary);
                require(static_cast<bool>(f), ErrorCategory::io, "cannot open '" + path.string() + "' for writing");
                f << csv.str();
                require(static_cast<bool>(f), ErrorCategory::io, "write to '" + path.string() + "' failed");
            }
            std::size_t rows = 0;
            for (const auto& p : pops) rows += p.size();
            manifest["rows"] = rows;
            manifest["csv"] = path.filename().string();
            manifest["csv_fnv1a64"] = fmt::format("{:016x}", fnv1a64(csv.str()));
            std::filesystem::path mpath = path;
            mpath.replace_extension(".manifest.json");
            std::ofstream m(mpath);
            require(static_cast<bool>(m), ErrorCategory::io, "cannot open '" + mpath.string() + "' for writing");
            m << manifest.dump(2) << '\n';
            fmt::print(out, "wrote {} rows over {} years to {}\n", rows, pops.size(), path.string());
            return 0;
        }

        if (*runc) {
            const ConfigFile file = load_optional(run_io.config);
            const ExperimentConfig config = build_experiment(run_exp, file);
            const auto runs = build_policies(run_pol, file);
            const auto pops = load_data(run_io, file);
            return execute(config, runs, pops, out_path(run_io, file, "results.csv"), out, err);
        }

        if (*sweep) {
            const ConfigFile file = load_optional(sweep_io.config);
            const ExperimentConfig config = build_experiment(sweep_exp, file);
            const auto runs = build_sweep(sweep_grid, sweep_single, file);
            const auto pops = load_data(sweep_io, file);
            return execute(config, runs, pops, out_path(sweep_io, file, "sweep.csv"), out, err);
        }

        if (*summarize) {
            std::vector<ResultRow> rows;
            for (const std::string& path : summarize_in) {
                ResultsFile f = read_results_csv(std::filesystem::path(path));
                rows.insert(rows.end(), std::make_move_iterator(f.rows.begin()), std::make_move_iterator(f.rows.end()));
            }
            require(!rows.empty(), ErrorCategory::data, "no result rows in the inputs");
            sort_rows(rows);
            const auto aggs = aggregate_rows(rows);
            if (summarize_out) write_aggregate_csv(std::filesystem::path(*summarize_out), aggs);
            print_aggregate_table(out, aggs);
            return 0;
        }

        if (*drift) {
            const ConfigFile file = load_optional(drift_io.config);
            const auto pops = load_data(drift_io, file);
            require(pops.size() >= 2, ErrorCategory::data, "drift needs at least two years");
            const auto rows = summary_stats(pops);
            std::string path;
            pick(path, drift_io.out, file, "io.out");
            if (path.empty()) {
                write_summary_csv(out, rows);
            } else {
                std::ofstream f(path, std::ios::binary);
                require(static_cast<bool>(f), ErrorCategory::io, "cannot open '" + path + "' for writing");
                write_summary_csv(f, rows);
            }
            return 0;
        }
    } catch (const Error& e) {
        fmt::print(err, "error: {}: {}\n", category_name(e.category()), e.what());
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        fmt::print(err, "error: internal: {}\n", e.what());
        return static_cast<int>(ErrorCategory::internal);
    }
    return static_cast<int>(ErrorCategory::usage);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"oeb"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace oeb::cli
