#include "oeb/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "oeb/error.hpp"
#include "oeb/metrics.hpp"
#include "oeb/rng.hpp"

namespace oeb {

void SyntheticConfig::validate() const {
    require(num_years > 0, ErrorCategory::config, "synthetic: years must be positive");
    require(arms_per_year > 0, ErrorCategory::config, "synthetic: arms_per_year must be positive");
    require(num_features >= 8, ErrorCategory::config, "synthetic: num_features must be at least 8");
    require(num_classes > 0, ErrorCategory::config, "synthetic: num_classes must be positive");
    require(static_cast<int>(class_weight_levels.size()) >= num_classes, ErrorCategory::config,
            "synthetic: need a weight level for every class");
    for (double w : class_weight_levels) require(w > 0.0, ErrorCategory::config, "synthetic: class weights must be positive");
    require(noncompliance_scale >= 0.0 && noncompliance_scale <= 1.0, ErrorCategory::config,
            "synthetic: noncompliance_scale must be in [0, 1]");
    require(reward_log_sd_base > 0.0, ErrorCategory::config, "synthetic: reward_log_sd_base must be positive");
    require(std::isfinite(drift_rate), ErrorCategory::config, "synthetic: drift_rate must be finite");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kLogTpiRef = 10.5;

}  // namespace

// Feature layout: x0 TPI, x1 class label, x2..x5 latent factors, x6 and x7
// schedule-style flags, then noise covariates cycling through gaussian,
// binary, zero-inflated amount and count types.
std::vector<PopulationYear> generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    const RngStream root(cfg.seed);
    std::vector<PopulationYear> out;
    out.reserve(static_cast<std::size_t>(cfg.num_years));

    // Class mix skews toward the low-income classes.
    std::vector<double> class_cdf(static_cast<std::size_t>(cfg.num_classes));
    double acc = 0.0;
    for (int c = 0; c < cfg.num_classes; ++c) {
        acc += 1.0 / (1.0 + 0.5 * c);
        class_cdf[static_cast<std::size_t>(c)] = acc;
    }

    std::int64_t next_id = 1;
    for (int t = 0; t < cfg.num_years; ++t) {
        RngStream rng = root.derive(static_cast<std::uint64_t>(t));
        const int year = cfg.first_year + t;
        const double shift = cfg.drift_rate * t;
        std::vector<ArmRecord> arms;
        arms.reserve(static_cast<std::size_t>(cfg.arms_per_year));

        for (int i = 0; i < cfg.arms_per_year; ++i) {
            ArmRecord a;
            a.id = ArmId{next_id++};
            a.year = year;

            const double uc = rng.uniform() * class_cdf.back();
            const int cls = static_cast<int>(std::upper_bound(class_cdf.begin(), class_cdf.end(), uc) - class_cdf.begin());
            a.stratum_class = std::min(cls, cfg.num_classes - 1);
            a.weight = cfg.class_weight_levels[static_cast<std::size_t>(a.stratum_class)] * std::exp(0.1 * rng.normal());

            const double log_tpi = 9.6 + 0.45 * a.stratum_class + 0.7 * rng.normal() + 0.5 * shift;
            a.tpi = std::exp(log_tpi);
            const double u1 = rng.normal(shift), u2 = rng.normal(shift), u3 = rng.normal(shift), u4 = rng.normal(shift);
            const double sched_c = rng.bernoulli(sigmoid(u1 - 0.5)) ? 1.0 : 0.0;
            const double sched_e = rng.bernoulli(sigmoid(0.8 * u2 - 1.0)) ? 1.0 : 0.0;

            a.features.resize(static_cast<std::size_t>(cfg.num_features));
            a.features[0] = a.tpi;
            a.features[1] = a.stratum_class;
            a.features[2] = u1;
            a.features[3] = u2;
            a.features[4] = u3;
            a.features[5] = u4;
            a.features[6] = sched_c;
            a.features[7] = sched_e;
            for (int f = 8; f < cfg.num_features; ++f) {
                double v = 0.0;
                switch (f % 4) {
                    case 0: v = rng.normal(shift); break;
                    case 1: v = rng.bernoulli(0.3) ? 1.0 : 0.0; break;
                    case 2: v = rng.bernoulli(0.3) ? std::exp(8.0 + shift + rng.normal()) : 0.0; break;
                    default: v = std::poisson_distribution<int>(2.0)(rng.engine()); break;
                }
                a.features[static_cast<std::size_t>(f)] = v;
            }

            // The sign interaction makes the risk surface non-linear.
            const double risk = 0.9 * (u1 - shift) + 0.9 * ((u2 - shift) * (u3 - shift) > 0.0 ? 1.0 : -1.0) +
                                0.8 * sched_c + 0.3 * (log_tpi - kLogTpiRef);
            const double p_nc = cfg.noncompliance_scale * sigmoid(cfg.noncompliance_intercept + risk);
            if (rng.bernoulli(p_nc)) {
                const double centred = log_tpi - kLogTpiRef;
                const double sd = std::max(0.3, cfg.reward_log_sd_base + cfg.reward_log_sd_tpi_slope * centred);
                const double loc = cfg.reward_log_base + cfg.reward_tpi_elasticity * centred + 0.5 * (u1 - shift) +
                                   0.3 * sched_e;
                a.true_reward = std::exp(loc + sd * rng.normal());
            }
            arms.push_back(std::move(a));
        }
        out.emplace_back(year, std::move(arms));
    }
    return out;
}

std::vector<PopulationYear> generate_interaction_task(const InteractionTaskConfig& cfg) {
    require(cfg.num_years > 0 && cfg.arms_per_year > 0, ErrorCategory::config, "interaction task: empty shape");
    require(cfg.num_features >= 3, ErrorCategory::config, "interaction task: need at least 3 features");
    require(cfg.noise_sd >= 0.0, ErrorCategory::config, "interaction task: noise_sd must be non-negative");
    const RngStream root = RngStream(cfg.seed).derive("interaction");
    std::vector<PopulationYear> out;
    std::int64_t next_id = 1;
    for (int t = 0; t < cfg.num_years; ++t) {
        RngStream rng = root.derive(static_cast<std::uint64_t>(t));
        std::vector<ArmRecord> arms;
        arms.reserve(static_cast<std::size_t>(cfg.arms_per_year));
        for (int i = 0; i < cfg.arms_per_year; ++i) {
            ArmRecord a;
            a.id = ArmId{next_id++};
            a.year = cfg.first_year + t;
            a.weight = 1.0;
            a.features.resize(static_cast<std::size_t>(cfg.num_features));
            for (double& x : a.features) x = rng.normal();
            const double s = (a.features[0] * a.features[1] > 0.0) ? 1.0 : -1.0;
            a.true_reward = std::max(0.0, 500.0 + cfg.interaction * s + cfg.linear * a.features[2] +
                                              cfg.noise_sd * rng.normal());
            a.tpi = std::exp(10.0 + 0.5 * a.features[2]);
            a.stratum_class = s > 0 ? 1 : 0;
            arms.push_back(std::move(a));
        }
        out.emplace_back(cfg.first_year + t, std::move(arms));
    }
    return out;
}

namespace {

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '"')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '"' || cell.back() == '\r')) cell.remove_suffix(1);
        cells.push_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

double parse_number(std::string_view cell, const std::string& source, std::size_t line, const std::string& column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
        fail(ErrorCategory::data, source + ": line " + std::to_string(line) + ", column '" + column +
                                      "': non-numeric value '" + std::string(cell) + "'");
    return v;
}

}  // namespace

std::vector<PopulationYear> parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || line.find_first_not_of(" \r\t") == std::string::npos)
        fail(ErrorCategory::data, source + ": empty file (header row required)");
    const auto header_views = split_row(line);
    std::vector<std::string> header(header_views.begin(), header_views.end());

    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) fail(ErrorCategory::data, source + ": missing required column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_id = column(schema.id), c_year = column(schema.year), c_weight = column(schema.weight),
                      c_reward = column(schema.reward), c_tpi = column(schema.tpi), c_class = column(schema.stratum_class);
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != c_id && c != c_year && c != c_weight && c != c_reward && c != c_tpi && c != c_class)
            feature_cols.push_back(c);

    std::map<int, std::vector<ArmRecord>> by_year;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size())
            fail(ErrorCategory::data, source + ": line " + std::to_string(line_no) + " has " +
                                          std::to_string(cells.size()) + " cells, header has " +
                                          std::to_string(header.size()));
        auto num = [&](std::size_t c) { return parse_number(cells[c], source, line_no, header[c]); };
        ArmRecord a;
        a.id = ArmId{static_cast<std::int64_t>(std::llround(num(c_id)))};
        a.year = static_cast<int>(std::lround(num(c_year)));
        a.weight = num(c_weight);
        a.true_reward = num(c_reward);
        a.tpi = num(c_tpi);
        a.stratum_class = static_cast<int>(std::lround(num(c_class)));
        a.features.reserve(feature_cols.size());
        for (std::size_t c : feature_cols) a.features.push_back(num(c));
        by_year[a.year].push_back(std::move(a));
    }
    if (by_year.empty()) fail(ErrorCategory::data, source + ": no data rows");

    std::vector<PopulationYear> out;
    for (auto& [year, arms] : by_year) out.emplace_back(year, std::move(arms));
    return out;
}

std::vector<PopulationYear> load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot open " + path.string());
    return parse_csv(in, schema, path.string());
}

void write_csv(std::ostream& out, const std::vector<PopulationYear>& populations, const CsvSchema& schema,
               const std::vector<std::string>& feature_names) {
    const std::size_t nf = populations.empty() ? 0 : populations.front().num_features();
    require(feature_names.empty() || feature_names.size() == nf, ErrorCategory::internal,
            "feature name count does not match the data");
    out << schema.id << ',' << schema.year << ',' << schema.weight << ',' << schema.reward << ',' << schema.tpi << ','
        << schema.stratum_class;
    for (std::size_t f = 0; f < nf; ++f) out << ',' << (feature_names.empty() ? "x" + std::to_string(f) : feature_names[f]);
    out << '\n';
    std::string row;
    for (const PopulationYear& pop : populations) {
        for (const ArmRecord& a : pop.arms()) {
            row = fmt::format("{},{},{},{},{},{}", a.id.value, a.year, a.weight, a.true_reward, a.tpi, a.stratum_class);
            for (double v : a.features) fmt::format_to(std::back_inserter(row), ",{}", v);
            row += '\n';
            out << row;
        }
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<PopulationYear>& populations,
               const CsvSchema& schema, const std::vector<std::string>& feature_names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    write_csv(out, populations, schema, feature_names);
    if (!out) fail(ErrorCategory::io, "write failed for " + path.string());
}

std::vector<SummaryRow> summary_stats(const std::vector<PopulationYear>& populations, Currency cutoff) {
    require(!populations.empty(), ErrorCategory::data, "summary statistics need at least one year");
    std::vector<SummaryRow> rows;
    for (std::size_t k = 0; k < populations.size(); ++k) {
        const PopulationYear& pop = populations[k];
        require(!pop.empty(), ErrorCategory::data, "year " + std::to_string(pop.year()) + " is empty");
        const std::vector<double> r = pop.rewards();
        SummaryRow row;
        row.year = pop.year();
        row.count = pop.size();
        row.mean_unweighted = mean(r);
        row.mean_weighted = weighted_population_mean(pop);
        if (k > 0) row.drift = covariate_drift(populations[k - 1], pop);
        row.no_change_rate = no_change_rate(r, cutoff);
        row.total_weight = pop.total_weight();
        rows.push_back(row);
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "year,count,mean_uw,mean_w,cov_drift,no_change_rate,total_weight\n";
    for (const SummaryRow& r : rows) {
        out << fmt::format("{},{},{:.2f},{:.2f},{},{:.4f},{:.2f}\n", r.year, r.count, r.mean_unweighted,
                           r.mean_weighted, r.drift ? fmt::format("{:.4f}", *r.drift) : std::string(),
                           r.no_change_rate, r.total_weight);
    }
}

}  // namespace oeb
