#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "oeb/harness.hpp"

namespace oeb {

inline constexpr int kResultsSchemaVersion = 1;

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct ResultsFile {
    int schema_version = kResultsSchemaVersion;
    Metadata metadata;  // "# key: value" lines, in file order
    std::vector<ResultRow> rows;
};

// Canonical row order: (policy, params_digest, seed, year).
void sort_rows(std::vector<ResultRow>& rows);

// Metadata lines first, then the header, then rows in canonical order.
// Money columns get two decimals; percentages and rates full precision.
void write_results_csv(std::ostream& out, std::vector<ResultRow> rows, const Metadata& metadata);
void write_results_csv(const std::filesystem::path& path, std::vector<ResultRow> rows, const Metadata& metadata);

ResultsFile read_results_csv(std::istream& in, const std::string& source = "<stream>");
ResultsFile read_results_csv(const std::filesystem::path& path);

void write_aggregate_csv(std::ostream& out, const std::vector<PolicyAggregate>& aggs);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<PolicyAggregate>& aggs);

// Human-readable Table-2 style rendering.
void print_aggregate_table(std::ostream& out, const std::vector<PolicyAggregate>& aggs);

// Metadata describing a run: schema, digests, seeds, estimand conventions.
Metadata run_metadata(const ExperimentConfig& config, const std::vector<PolicyRun>& runs);

}  // namespace oeb
