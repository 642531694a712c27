#include <doctest.h>

#include "fdelab/cli.hpp"
#include "fdelab/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace fdelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fdelab_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path write_config(const fs::path& dir, const Json& doc) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

bool has_temp_files(const fs::path& dir) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.path().extension() == ".tmp") {
            return true;
        }
    }
    return false;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

Json small_evolve() {
    return Json::parse(R"({
        "params": {"n": 3, "m": 0.2, "beta": 3},
        "initial": {"kind": "sandwich_blend", "lambda_0": 1, "lambda_1": 0.8, "lambda_2": 1.25},
        "grid": {"dr": 0.05, "outer_radius": 20},
        "tau_end": 0.5,
        "sample_every": 0.25,
        "reference_lambda": 1,
        "diagnostics": {
            "weighted_l1": true,
            "comparison": [{"kind": "profile_exact", "lambda_0": 0.8}, {"kind": "profile_exact", "lambda_0": 1.25}]
        }
    })");
}

} // namespace

TEST_CASE("params command") {
    const Json c3 = cmd_params(3, 0.2, 2.5);
    CHECK(c3["regime"]["label"] == "C3i");
    CHECK(c3["regime"]["sign_a1"] == "zero");
    CHECK(c3["params"]["gamma_2"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c3["params"]["p0"].is_null());

    const Json c1 = cmd_params(3, 0.2, 3.0);
    CHECK(c1["regime"]["label"] == "C1i");
    CHECK(c1["params"]["p0"].is_number());

    const CliResult ok = cli({"params", "3", "0.2", "2.2"});
    CHECK(ok.code == 0);
    CHECK(Json::parse(ok.out)["regime"]["label"] == "C2i");

    const CliResult bad = cli({"params", "3", "0.9", "1"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("subcritical") != std::string::npos);

    CHECK(cli({"params", "3", "0.2"}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"--threads", "0", "params", "3", "0.2", "3"}).code == 2);

    const fs::path dir = scratch("params");
    CHECK(cli({"--out", dir.string(), "params", "3", "0.2", "3"}).code == 0);
    CHECK(Json::parse(slurp(dir / "params.json"))["regime"]["label"] == "C1i");
    fs::remove_all(dir);
}

TEST_CASE("profile command in the Barenblatt case") {
    const fs::path dir = scratch("profile");
    const Json config = Json::parse(R"({
        "params": {"n": 3, "m": 0.2, "beta": 2.5},
        "lambdas": [0.5, 1, 2],
        "grid": {"r_max": 1e24}
    })");
    const Json summary = cmd_profile(config, RunContext{dir, 1});

    for (const char* tag : {"0.5", "1", "2"}) {
        CHECK(fs::exists(dir / (std::string("profile_") + tag + ".csv")));
        CHECK(fs::exists(dir / (std::string("trace_") + tag + ".csv")));
        CHECK(fs::exists(dir / (std::string("fit_") + tag + ".json")));
    }
    CHECK(fs::exists(dir / "scaling_check.json"));
    CHECK(fs::exists(dir / "profile_summary.json"));
    CHECK_FALSE(has_temp_files(dir));

    REQUIRE(summary["profiles"].size() == 3);
    for (const auto& prof : summary["profiles"]) {
        CHECK(prof["fit"]["b_collapse"].get<double>() == doctest::Approx(0.25).epsilon(0.01));
        CHECK(prof["barenblatt_max_rel_error"].get<double>() < 1e-6);
    }
    const Json fit1 = Json::parse(slurp(dir / "fit_1.json"));
    CHECK(fit1["b_lambda"].get<double>() == doctest::Approx(0.25).epsilon(0.01));
    CHECK(fit1["gamma_used"].get<double>() == 2.0);

    const Json scaling = Json::parse(slurp(dir / "scaling_check.json"));
    CHECK(scaling["base_lambda"].get<double>() == 1.0);
    CHECK(scaling["max_rescale_deviation"].get<double>() < 1e-8);
    CHECK(scaling["max_collapse_deviation"].get<double>() < 0.01);
    CHECK(scaling["ordering"][0]["ordered"] == true);

    const auto rows = lines_of(slurp(dir / "profile_1.csv"));
    REQUIRE(rows.size() > 10);
    CHECK(rows[0] == "r,f,fprime,r2f1m");
    // Values carry 15 significant digits.
    const std::string cell = rows[rows.size() / 2].substr(rows[rows.size() / 2].find(',') + 1);
    const std::string f = cell.substr(0, cell.find(','));
    std::size_t digits = 0;
    for (char ch : f.substr(0, f.find_first_of("eE"))) {
        digits += std::isdigit(static_cast<unsigned char>(ch)) ? 1 : 0;
    }
    CHECK(digits >= 12);
    CHECK(lines_of(slurp(dir / "trace_1.csv"))[0] == "s,g,w,phi,h");

    const Json again = cmd_profile(config, RunContext{dir, 2});
    CHECK(again.dump() == summary.dump());
    fs::remove_all(dir);
}

TEST_CASE("profile config errors map to exit code 2") {
    const fs::path dir = scratch("profile_bad");
    const fs::path bad_grid = write_config(dir, Json::parse(R"({
        "params": {"n": 3, "m": 0.2, "beta": 3},
        "lambdas": [1],
        "grid": {"r_inner": 0.5, "r_max": 0.1}
    })"));
    CHECK(cli({"--config", bad_grid.string(), "--out", dir.string(), "profile"}).code == 2);

    const fs::path unknown = write_config(dir, Json::parse(R"({
        "params": {"n": 3, "m": 0.2, "beta": 3},
        "lambdas": [1],
        "lamdas": [2]
    })"));
    const CliResult r = cli({"--config", unknown.string(), "--out", dir.string(), "profile"});
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown key 'lamdas'") != std::string::npos);

    CHECK(cli({"--out", dir.string(), "profile"}).code == 2);
    CHECK(cli({"--config", (dir / "missing.json").string(), "profile"}).code == 2);
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(cli({"--config", (dir / "broken.json").string(), "profile"}).code == 2);
    fs::remove_all(dir);
}

TEST_CASE("evolve needs a reference for the weighted distance") {
    const fs::path dir = scratch("evolve_noref");
    Json config = small_evolve();
    config.erase("reference_lambda");
    const fs::path path = write_config(dir, config);
    const CliResult r = cli({"--config", path.string(), "--out", dir.string(), "evolve"});
    CHECK(r.code == 2);
    CHECK(r.err.find("weighted_l1 needs a reference profile: set reference_lambda") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("evolve outputs are deterministic across thread counts") {
    const fs::path one = scratch("evolve_t1");
    const fs::path three = scratch("evolve_t3");
    const Json config = small_evolve();
    const Json s1 = cmd_evolve(config, RunContext{one, 1});
    const Json s3 = cmd_evolve(config, RunContext{three, 3});
    CHECK(s1.dump() == s3.dump());
    for (const char* name : {"report.csv", "comparison_0.csv", "comparison_1.csv", "evolve_summary.json"}) {
        REQUIRE(fs::exists(one / name));
        CHECK(slurp(one / name) == slurp(three / name));
    }
    CHECK_FALSE(has_temp_files(one));

    const auto rows = lines_of(slurp(one / "report.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "tau,sup_dist,l1_dist,wl1_dist,center_value,lambda_env");
    // No envelope outside the non-monotone case: the last field stays empty.
    CHECK(rows[1].back() == ',');
    CHECK(s1["center_strictly_decreasing"].is_boolean());
    CHECK(s1["comparison_0"]["min_order_gap"].get<double>() > 0.0);
    CHECK(s1["comparison_1"]["min_order_gap"].get<double>() > 0.0);
    CHECK(s1["sup_ratio"].get<double>() < 1.0);
    fs::remove_all(one);
    fs::remove_all(three);
}

TEST_CASE("short non-monotone run has a shrinking envelope") {
    const fs::path dir = scratch("evolve_c2");
    const Json config = Json::parse(R"({
        "params": {"n": 3, "m": 0.2, "beta": 2.2},
        "initial": {"kind": "min_profiles", "lambda_1": 1, "lambda_2": 2},
        "grid": {"dr": 0.02},
        "tau_end": 3,
        "sample_every": 1,
        "diagnostics": {"envelope": {"lam_lo": 0.02, "lam_hi": 4, "tol": 1e-7}}
    })");
    const Json s = cmd_evolve(config, RunContext{dir, 1});
    CHECK(s["lambda_env_strictly_decreasing"] == true);
    CHECK(s["lambda_env_final"].get<double>() < 1.0);
    CHECK(fs::exists(dir / "envelope_scan.csv"));
    const auto rows = lines_of(slurp(dir / "report.csv"));
    REQUIRE(rows.size() == 5);
    // Without a reference the distance columns are empty.
    CHECK(rows[1].find(",,,") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("sweeps") {
    const fs::path dir = scratch("sweep");
    const Json tail = cmd_sweep(Json::parse(R"({
        "kind": "tail_integral",
        "params": {"n": 3, "m": 0.2, "beta": 2.5},
        "lambdas": [1, 2],
        "radii": [100, 1000, 10000],
        "grid": {"r_max": 1e4}
    })"),
                                RunContext{dir, 2});
    CHECK(tail["tail_exponent"].get<double>() == doctest::Approx(-1.5).epsilon(1e-12));
    for (const auto& e : tail["estimated_exponents"]) {
        CHECK(e.get<double>() == doctest::Approx(-1.5).epsilon(0.01));
    }
    const auto tail_rows = lines_of(slurp(dir / "tail_integral.csv"));
    REQUIRE(tail_rows.size() == 4);
    CHECK(tail_rows[0] == "R,integral,increment");
    CHECK(tail_rows[1].back() == ',');
    CHECK(fs::exists(dir / "sweep_summary.json"));

    const Json table = cmd_sweep(Json::parse(R"({"kind": "regime_table", "dims": [3, 6], "m_points": 4,
                                                  "beta_points": 5})"),
                                 RunContext{dir, 1});
    CHECK(table["rows"].get<int>() > 0);
    const auto table_rows = lines_of(slurp(dir / "regime_table.csv"));
    CHECK(table_rows[0] == "n,m,beta,label,sign_a1,a1");
    CHECK(static_cast<int>(table_rows.size()) == table["rows"].get<int>() + 1);

    const Json station = cmd_sweep(Json::parse(R"({"kind": "stationarity", "params": {"n": 3, "m": 0.2, "beta": 3},
                                                    "dr": [0.04, 0.02], "steps": 50})"),
                                   RunContext{dir, 2});
    REQUIRE(station["runs"].size() == 2);
    CHECK(station["runs"][1]["max_rel_drift"].get<double>() < station["runs"][0]["max_rel_drift"].get<double>());
    CHECK_FALSE(has_temp_files(dir));

    CHECK_THROWS_AS((void)cmd_sweep(Json::parse(R"({"kind": "nope"})"), RunContext{dir, 1}), ConfigError);
    CHECK_THROWS_AS((void)cmd_sweep(Json::parse(R"({"dims": [3]})"), RunContext{dir, 1}), ConfigError);
    const fs::path path = write_config(dir, Json::parse(R"({"kind": "regime_table", "dims": [3], "extra": 1})"));
    CHECK(cli({"--config", path.string(), "--out", dir.string(), "sweep"}).code == 2);
    fs::remove_all(dir);
}
