#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oeb/harness.hpp"

namespace oeb::cli {

// Line-oriented `key = value` file with `[section]` headers and `#`
// comments. Values are stored under "section.key".
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    std::optional<std::string> get(const std::string& qualified_key) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// "N" means seeds 0..N-1; a comma-separated list gives the seeds verbatim.
std::vector<std::uint64_t> parse_seed_spec(const std::string& spec);

// The seven Table-2 style configurations, ABS rows with an unweighted fit.
std::vector<PolicyRun> table2_policies();

// Runs one command line (argv[0] is the program name). Exit code 0 on
// success, otherwise the ErrorCategory value, with "error: <category>: msg"
// lines on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oeb::cli
