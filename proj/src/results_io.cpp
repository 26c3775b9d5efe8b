#include "oeb/results_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "oeb/error.hpp"
#include "oeb/rng.hpp"

#ifndef OEB_VERSION
#define OEB_VERSION "dev"
#endif

namespace oeb {

namespace {

const std::vector<std::string> kColumns = {"schema_version", "policy",         "params_digest", "seed",
                                           "year",           "reward_sum",     "estimate",      "true_mean",
                                           "pct_diff",       "no_change_rate", "avg_tpi",       "n_selected",
                                           "class_hist",     "eps_estimate"};

std::string money(double v) { return fmt::format("{:.2f}", v); }

// NaN (undefined for a single seed) is written as an empty cell.
std::string stat(double v) { return std::isnan(v) ? std::string() : fmt::format("{:.6f}", v); }

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        std::string cell = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(std::move(cell));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_cell(const std::string& cell, const std::string& where) {
    T v{};
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        fail(ErrorCategory::data, where + ": cannot parse '" + cell + "'");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCategory::io, "cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

void sort_rows(std::vector<ResultRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.policy, a.params_digest, a.seed, a.year) < std::tie(b.policy, b.params_digest, b.seed, b.year);
    });
}

void write_results_csv(std::ostream& out, std::vector<ResultRow> rows, const Metadata& metadata) {
    sort_rows(rows);
    for (const auto& [k, v] : metadata) fmt::print(out, "# {}: {}\n", k, v);
    for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
    out << '\n';
    for (const ResultRow& r : rows) {
        std::string hist;
        for (std::size_t i = 0; i < r.class_hist.size(); ++i) hist += (i ? ";" : "") + std::to_string(r.class_hist[i]);
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", kResultsSchemaVersion, r.policy, r.params_digest,
                   r.seed, r.year, money(r.reward_sum), money(r.estimate), money(r.true_mean), r.pct_diff,
                   r.no_change_rate, money(r.avg_tpi), r.n_selected, hist,
                   r.eps_estimate ? money(*r.eps_estimate) : std::string());
    }
    require(static_cast<bool>(out), ErrorCategory::io, "write failed");
}

void write_results_csv(const std::filesystem::path& path, std::vector<ResultRow> rows, const Metadata& metadata) {
    auto out = open_out(path);
    write_results_csv(out, std::move(rows), metadata);
}

ResultsFile read_results_csv(std::istream& in, const std::string& source) {
    ResultsFile file;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    std::optional<int> meta_version;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::size_t colon = line.find(':');
            if (colon == std::string::npos) continue;
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(' '));
                s.erase(s.find_last_not_of(' ') + 1);
                return s;
            };
            std::string key = trim(line.substr(1, colon - 1)), value = trim(line.substr(colon + 1));
            if (key == "schema_version") meta_version = parse_cell<int>(value, source + ": metadata");
            file.metadata.emplace_back(std::move(key), std::move(value));
            continue;
        }
        if (header.empty()) {
            header = split(line, ',');
            for (std::size_t i = 0; i + 1 < kColumns.size(); ++i)
                require(i < header.size() && header[i] == kColumns[i], ErrorCategory::data,
                        fmt::format("{}: header column {} should be '{}'", source, i + 1, kColumns[i]));
            continue;
        }
        const auto cells = split(line, ',');
        const std::string where = fmt::format("{}: line {}", source, lineno);
        require(cells.size() == header.size(), ErrorCategory::data,
                fmt::format("{}: expected {} cells, found {}", where, header.size(), cells.size()));
        const int version = parse_cell<int>(cells[0], where);
        require(version == kResultsSchemaVersion, ErrorCategory::data,
                fmt::format("{}: schema version {} (this build reads {})", where, version, kResultsSchemaVersion));
        ResultRow r;
        r.policy = cells[1];
        r.params_digest = cells[2];
        r.seed = parse_cell<std::uint64_t>(cells[3], where);
        r.year = parse_cell<int>(cells[4], where);
        r.reward_sum = parse_cell<double>(cells[5], where);
        r.estimate = parse_cell<double>(cells[6], where);
        r.true_mean = parse_cell<double>(cells[7], where);
        r.pct_diff = parse_cell<double>(cells[8], where);
        r.no_change_rate = parse_cell<double>(cells[9], where);
        r.avg_tpi = parse_cell<double>(cells[10], where);
        r.n_selected = parse_cell<std::size_t>(cells[11], where);
        if (!cells[12].empty())
            for (const std::string& c : split(cells[12], ';')) r.class_hist.push_back(parse_cell<std::size_t>(c, where));
        if (cells.size() > 13 && !cells[13].empty()) r.eps_estimate = parse_cell<double>(cells[13], where);
        file.rows.push_back(std::move(r));
    }
    require(!header.empty(), ErrorCategory::data, source + ": no header row");
    if (meta_version)
        require(*meta_version == kResultsSchemaVersion, ErrorCategory::data,
                fmt::format("{}: schema version {} (this build reads {})", source, *meta_version, kResultsSchemaVersion));
    return file;
}

ResultsFile read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCategory::io, "cannot open '" + path.string() + "'");
    return read_results_csv(in, path.string());
}

void write_aggregate_csv(std::ostream& out, const std::vector<PolicyAggregate>& aggs) {
    out << "policy,params_digest,R_mean,R_std,mu_PE,sigma_PE,rms_PE,mu_NR,overlap_band\n";
    for (const PolicyAggregate& a : aggs)
        fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", a.policy, a.params_digest, money(a.r_mean),
                   std::isnan(a.r_std) ? std::string() : money(a.r_std), stat(a.mu_pe), stat(a.sigma_pe),
                   stat(a.rms_pe), stat(a.mu_nr), a.overlap_band ? 1 : 0);
    require(static_cast<bool>(out), ErrorCategory::io, "write failed");
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<PolicyAggregate>& aggs) {
    auto out = open_out(path);
    write_aggregate_csv(out, aggs);
}

void print_aggregate_table(std::ostream& out, const std::vector<PolicyAggregate>& aggs) {
    std::size_t width = 6;
    for (const auto& a : aggs) width = std::max(width, a.policy.size());
    fmt::print(out, "{:<{}}  {:>16} {:>14} {:>8} {:>8} {:>8} {:>7}\n", "policy", width, "R", "R_std", "mu_PE",
               "sigma_PE", "rms_PE", "mu_NR");
    auto num = [](double v, int prec) { return std::isnan(v) ? std::string("-") : fmt::format("{:.{}f}", v, prec); };
    for (const auto& a : aggs)
        fmt::print(out, "{:<{}}  {:>15}{} {:>14} {:>8} {:>8} {:>8} {:>6.1f}%\n", a.policy, width, num(a.r_mean, 2),
                   a.overlap_band ? "*" : " ", num(a.r_std, 2), num(a.mu_pe, 2), num(a.sigma_pe, 2),
                   num(a.rms_pe, 2), 100.0 * a.mu_nr);
}

Metadata run_metadata(const ExperimentConfig& config, const std::vector<PolicyRun>& runs) {
    std::string canon = config.canonical();
    for (const PolicyRun& r : runs) canon += "|" + r.policy.name() + ":" + params_digest(config, r);
    std::string seeds;
    for (std::size_t i = 0; i < config.seeds.size(); ++i) seeds += (i ? " " : "") + std::to_string(config.seeds[i]);
    return {
        {"schema_version", std::to_string(kResultsSchemaVersion)},
        {"artifact_version", OEB_VERSION},
        {"config_digest", fmt::format("{:016x}", fnv1a64(canon))},
        {"config", config.canonical()},
        {"seeds", seeds},
        {"true_mean", "weighted mean of the offered (subsampled) population"},
        {"mu_PE", "absolute value of the mean signed percent difference"},
        {"winsorize", config.winsorize ? "p99 nearest-rank over the pooled revealed history at each refit" : "off"},
    };
}

}  // namespace oeb
