#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "oeb/cli.hpp"
#include "oeb/error.hpp"
#include "oeb/results_io.hpp"

namespace fs = std::filesystem;
using namespace oeb;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("oeb_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

// Small population shared by the run/sweep tests: 4 years, 2 of them scored.
std::string tiny_population(const TempDir& dir) {
    const std::string p = dir / "tiny.csv";
    REQUIRE(invoke({"gen-data", "--seed", "3", "--years", "4", "--arms-per-year", "200", "--features", "8", "--out", p})
                .code == 0);
    return p;
}

const std::vector<std::string> kFast{"--budget", "20", "--trees", "8", "--max-depth", "5"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("gen-data writes the requested shape deterministically") {
    TempDir dir;
    const auto a = invoke({"gen-data", "--seed", "7", "--years", "9", "--arms-per-year", "1500", "--out", dir / "a.csv"});
    REQUIRE(a.code == 0);
    const auto rows = lines(slurp(dir / "a.csv"));
    CHECK(rows.size() == 1 + 9 * 1500);

    REQUIRE(invoke({"gen-data", "--seed", "7", "--years", "9", "--arms-per-year", "1500", "--out", dir / "b.csv"}).code ==
            0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

    auto ma = nlohmann::json::parse(slurp(dir / "a.manifest.json"));
    auto mb = nlohmann::json::parse(slurp(dir / "b.manifest.json"));
    CHECK(ma["rows"] == 13500);
    CHECK(ma["csv_fnv1a64"] == mb["csv_fnv1a64"]);
    for (auto* m : {&ma, &mb}) m->erase("created_utc"), m->erase("csv");
    CHECK(ma == mb);

    const auto bad = invoke({"gen-data", "--years", "0", "--out", dir / "c.csv"});
    CHECK(bad.code == static_cast<int>(ErrorCategory::config));
    CHECK(bad.err.rfind("error: config: ", 0) == 0);
    CHECK(lines(bad.err).size() == 1);
}

TEST_CASE("run emits one row per seed and scored year") {
    TempDir dir;
    const auto pop = tiny_population(dir);
    const auto r = invoke(with({"run", "--data", pop, "--policy", "greedy", "--seeds", "2", "--out", dir / "r.csv"}, kFast));
    REQUIRE(r.code == 0);
    const auto file = read_results_csv(fs::path(dir / "r.csv"));
    CHECK(file.rows.size() == 2 * 2);
    CHECK(file.schema_version == kResultsSchemaVersion);
    const auto agg = lines(slurp(dir / "r.agg.csv"));
    REQUIRE(agg.size() == 2);
    CHECK(agg[0] == "policy,params_digest,R_mean,R_std,mu_PE,sigma_PE,rms_PE,mu_NR,overlap_band");

    // byte-identical rerun, with and without threads
    REQUIRE(invoke(with({"run", "--data", pop, "--policy", "greedy", "--seeds", "2", "--jobs", "2", "--out",
                      dir / "r2.csv"},
                     kFast))
                .code == 0);
    CHECK(slurp(dir / "r.csv") == slurp(dir / "r2.csv"));
    CHECK(slurp(dir / "r.agg.csv") == slurp(dir / "r2.agg.csv"));
}

TEST_CASE("table2 preset runs seven rows") {
    TempDir dir;
    const auto pop = tiny_population(dir);
    const auto r = invoke(with({"run", "--data", pop, "--policy", "table2", "--seeds", "2", "--out", dir / "t.csv"}, kFast));
    REQUIRE(r.code == 0);
    CHECK(lines(slurp(dir / "t.agg.csv")).size() == 1 + 7);
    CHECK(cli::table2_policies().size() == 7);
}

TEST_CASE("sweep cardinality and dedup") {
    TempDir dir;
    const auto pop = tiny_population(dir);
    REQUIRE(invoke(with({"sweep", "--data", pop, "--alpha", "1,5", "--trim", "0,0.05", "--seeds", "3", "--out",
                      dir / "s.csv"},
                     kFast))
                .code == 0);
    CHECK(read_results_csv(fs::path(dir / "s.csv")).rows.size() == 4 * 3 * 2);

    REQUIRE(invoke(with({"sweep", "--data", pop, "--trim", "0.05,0.05", "--seeds", "2", "--out", dir / "d.csv"}, kFast))
                .code == 0);
    CHECK(lines(slurp(dir / "d.agg.csv")).size() == 1 + 1);

    CHECK(invoke(with({"sweep", "--data", pop, "--trim", ",", "--out", dir / "e.csv"}, kFast)).code ==
          static_cast<int>(ErrorCategory::usage));
}

TEST_CASE("summarize") {
    TempDir dir;
    const auto pop = tiny_population(dir);
    REQUIRE(invoke(with({"run", "--data", pop, "--policy", "random", "--seeds", "3", "--out", dir / "r.csv"}, kFast))
                .code == 0);
    REQUIRE(invoke({"summarize", dir / "r.csv", "--out", dir / "one.csv"}).code == 0);
    CHECK(lines(slurp(dir / "one.csv")).size() == 2);

    // a renamed copy of the same rows: identical aggregates, overlapping bands
    auto file = read_results_csv(fs::path(dir / "r.csv"));
    for (auto& row : file.rows) row.policy = "random-copy";
    write_results_csv(fs::path(dir / "copy.csv"), file.rows, file.metadata);
    REQUIRE(invoke({"summarize", dir / "r.csv", dir / "copy.csv", "--out", dir / "two.csv"}).code == 0);
    const auto two = lines(slurp(dir / "two.csv"));
    REQUIRE(two.size() == 3);
    auto tail = [](const std::string& l) { return l.substr(l.find(',')); };
    CHECK(tail(two[1]) == tail(two[2]));
    CHECK(two[1].back() == '1');
    CHECK(two[2].back() == '1');

    // schema mismatch
    std::string text = slurp(dir / "r.csv");
    const auto pos = text.find("\n1,");
    REQUIRE(pos != std::string::npos);
    text[pos + 1] = '2';
    std::ofstream(dir / "v2.csv") << text;
    const auto bad = invoke({"summarize", dir / "r.csv", dir / "v2.csv"});
    CHECK(bad.code == static_cast<int>(ErrorCategory::data));
}

TEST_CASE("drift command") {
    TempDir dir;
    REQUIRE(invoke({"gen-data", "--years", "9", "--arms-per-year", "300", "--out", dir / "p.csv"}).code == 0);
    const auto r = invoke({"drift", "--data", dir / "p.csv"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 10);
    int filled = 0;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        // year,count,mean_uw,mean_w,cov_drift,...
        std::vector<std::string> cells;
        std::istringstream s(ls[i]);
        for (std::string c; std::getline(s, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 7);
        if (!cells[4].empty()) ++filled;
        if (i == 1) CHECK(cells[4].empty());
    }
    CHECK(filled == 8);

    // two identical years
    std::ofstream(dir / "same.csv") << "id,year,weight,reward,tpi,class,x0\n"
                                       "1,2006,1,0,10,0,0.5\n2,2006,1,300,20,0,1.5\n"
                                       "1,2007,1,0,10,0,0.5\n2,2007,1,300,20,0,1.5\n";
    const auto same = invoke({"drift", "--data", dir / "same.csv"});
    REQUIRE(same.code == 0);
    const auto sl = lines(same.out);
    REQUIRE(sl.size() == 3);
    std::vector<std::string> cells;
    std::istringstream s(sl[2]);
    for (std::string c; std::getline(s, c, ',');) cells.push_back(c);
    CHECK(std::stod(cells[4]) == doctest::Approx(0.0));

    std::ofstream(dir / "one.csv") << "id,year,weight,reward,tpi,class,x0\n1,2006,1,0,10,0,0.5\n";
    CHECK(invoke({"drift", "--data", dir / "one.csv"}).code == static_cast<int>(ErrorCategory::data));
}

TEST_CASE("config file precedence") {
    TempDir dir;
    const auto pop = tiny_population(dir);
    std::ofstream(dir / "c.ini") << "# experiment settings\n[experiment]\nbudget = 15\nseeds = 2\n[model]\ntrees = 8\n"
                                    "max-depth = 5\n[policy]\npolicy = greedy\n";
    REQUIRE(invoke({"run", "--config", dir / "c.ini", "--data", pop, "--out", dir / "a.csv"}).code == 0);
    for (const auto& row : read_results_csv(fs::path(dir / "a.csv")).rows) CHECK(row.n_selected == 15);
    REQUIRE(invoke({"run", "--config", dir / "c.ini", "--data", pop, "--budget", "12", "--out", dir / "b.csv"}).code == 0);
    const auto b = read_results_csv(fs::path(dir / "b.csv"));
    CHECK(b.rows.size() == 4);
    for (const auto& row : b.rows) CHECK(row.n_selected == 12);

    std::ofstream(dir / "bad.ini") << "[experiment]\nbugdet = 15\n";
    CHECK(invoke({"run", "--config", dir / "bad.ini", "--data", pop}).code == static_cast<int>(ErrorCategory::config));
    std::istringstream orphan("budget = 3\n");
    CHECK_THROWS_AS(cli::ConfigFile::parse(orphan), Error);
    std::istringstream ok("[a]\nx = 1 # note\n");
    CHECK(cli::ConfigFile::parse(ok).get("a.x") == "1");
}

TEST_CASE("seed specs") {
    CHECK(cli::parse_seed_spec("3") == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(cli::parse_seed_spec("5,9,11") == std::vector<std::uint64_t>{5, 9, 11});
    CHECK_THROWS_AS(cli::parse_seed_spec("x"), Error);
}

TEST_CASE("exit codes") {
    TempDir dir;
    CHECK(invoke({}).code == static_cast<int>(ErrorCategory::usage));
    CHECK(invoke({"run", "--bogus"}).code == static_cast<int>(ErrorCategory::usage));
    CHECK(invoke({"--version"}).code == 0);
    CHECK(invoke({"run", "--data", dir / "missing.csv"}).code == static_cast<int>(ErrorCategory::io));
    const auto pop = tiny_population(dir);
    const auto inf = invoke({"run", "--data", pop, "--budget", "5000", "--seeds", "1", "--policy", "random", "--out",
                          dir / "x.csv"});
    CHECK(inf.code == static_cast<int>(ErrorCategory::infeasible));
    CHECK(inf.err.rfind("error: infeasible: ", 0) == 0);
    const auto ucb = invoke(with({"run", "--data", pop, "--model", "ridge", "--policy", "ucb", "--seeds", "1", "--out",
                               dir / "y.csv"},
                              kFast));
    CHECK(ucb.code == static_cast<int>(ErrorCategory::config));
}
