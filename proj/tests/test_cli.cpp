#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <dsrank/cli.hpp>

namespace fs = std::filesystem;
using namespace dsrank;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "dsrank");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        unsetenv("DSRANK_SEED");
        dir_ = fs::temp_directory_path() / ("dsrank_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        std::ofstream(dir_ / "banks.csv")
            << "bank_id,name,year,interbank_assets,interbank_liabilities,equity,external_assets,external_liabilities\n"
               "B1,First,2008,5,4,10,,\n"
               "B2,Second,2008,4,5,10,,\n"
               "B1,First,2009,5,4,-1,,\n"
               "B2,Second,2009,4,5,10,,\n";
    }
    std::string path(const std::string &name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

} // namespace

TEST_F(CliTest, ValidateAdmissibleAndNot) {
    auto r = call({"validate", "--input", path("banks.csv"), "--year", "2008"});
    EXPECT_EQ(r.code, 0) << r.err;
    auto report = nlohmann::json::parse(r.out);
    EXPECT_EQ(report[0]["admitted"], 2);
    EXPECT_TRUE(report[0]["issues"].empty());

    r = call({"validate", "--input", path("banks.csv"), "--year", "2009"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(nlohmann::json::parse(r.out)[0]["issues"][0]["kind"], "negative equity");
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(call({}).code, 1);
    EXPECT_EQ(call({"group-shock", "--bogus"}).code, 1);
    EXPECT_EQ(call({"validate", "--config", path("missing.json")}).code, 1);
    EXPECT_EQ(call({"validate", "--input", path("missing.csv")}).code, 1);
    EXPECT_EQ(call({"validate", "--input", path("banks.csv"), "--year", "1990"}).code, 2);
    EXPECT_EQ(call({"group-shock", "--input", path("banks.csv"), "--rho", "2", "-o", path("x")}).code, 1);
    std::ofstream(dir_ / "bad.csv") << "bank_id,name\n";
    EXPECT_EQ(call({"validate", "--input", path("bad.csv")}).code, 2);
    EXPECT_EQ(call({"--help"}).code, 0);
}

TEST_F(CliTest, OutputCollisionNeedsForce) {
    auto args = std::vector<std::string>{"group-shock", "--input", path("banks.csv"), "--year", "2008",
                                         "--ensemble-size", "3", "--psi-count", "5", "-o", path("out")};
    EXPECT_EQ(call(args).code, 0);
    auto r = call(args);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--force"), std::string::npos);
    args.push_back("--force");
    EXPECT_EQ(call(args).code, 0);
}

TEST_F(CliTest, GroupShockFilesAndManifest) {
    auto r = call({"group-shock", "--input", path("banks.csv"), "--year", "2008", "--ensemble-size", "4", "--psi-count",
                   "11", "--rho", "0,1", "--damping", "once,persistent", "--seed", "12", "-o", path("g")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream results(slurp(dir_ / "g" / "results.csv"));
    auto rows = read_results(results);
    EXPECT_EQ(rows.size(), 2u * 2u * 11u);
    EXPECT_TRUE(fs::exists(dir_ / "g" / "delta.csv"));

    auto m = nlohmann::json::parse(slurp(dir_ / "g" / "manifest.json"));
    EXPECT_EQ(m["command"], "group-shock");
    EXPECT_EQ(m["seeds"]["master_seed"], 12);
    EXPECT_EQ(m["seeds"]["source"], "flag");
    EXPECT_EQ(m["inputs"][0]["sha256"], sha256_file(dir_ / "banks.csv"));
    for (const auto &a : m["artifacts"])
        EXPECT_EQ(a["sha256"], sha256_file(dir_ / "g" / a["path"].get<std::string>()));
    EXPECT_EQ(slurp(dir_ / "g" / "manifest.json").find("time"), std::string::npos);
}

TEST_F(CliTest, RerunFromManifestIsByteIdentical) {
    ASSERT_EQ(call({"group-shock", "--input", path("banks.csv"), "--year", "2008", "--ensemble-size", "6", "--psi-count",
                    "7", "--seed", "3", "--jobs", "1", "-o", path("a")})
                  .code,
              0);
    ASSERT_EQ(call({"group-shock", "--config", path("a/manifest.json"), "--jobs", "4", "-o", path("b")}).code, 0);
    for (const char *f : {"results.csv", "delta.csv"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, SeedFromEnvironment) {
    setenv("DSRANK_SEED", "41", 1);
    ASSERT_EQ(call({"reconstruct", "--input", path("banks.csv"), "--year", "2008", "--ensemble-size", "2", "-o",
                    path("r")})
                  .code,
              0);
    unsetenv("DSRANK_SEED");
    auto m = nlohmann::json::parse(slurp(dir_ / "r" / "manifest.json"));
    EXPECT_EQ(m["seeds"]["master_seed"], 41);
    EXPECT_EQ(m["seeds"]["source"], "env");
    EXPECT_TRUE(fs::exists(dir_ / "r" / "exposures" / "2008" / "net_0001.csv"));
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
    std::ofstream(dir_ / "scen.json") << R"({"input": "banks.csv", "years": [2008], "ensemble_size": 2,
        "psi_grid": {"count": 3}, "rho": [0, 0.5, 1], "kind": "delta-sweep", "output": "from-config"})";
    auto r = call({"group-shock", "--config", path("scen.json"), "--psi-count", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream results(slurp(dir_ / "from-config" / "results.csv"));
    EXPECT_EQ(read_results(results).size(), 3u * 5u);
    EXPECT_EQ(call({"individual-shock", "--config", path("scen.json"), "-o", path("i")}).code, 1);
}

TEST_F(CliTest, IndividualThenPlot) {
    ASSERT_EQ(call({"individual-shock", "--input", path("banks.csv"), "--year", "2008", "--ensemble-size", "1",
                    "--density", "0.99", "--rho", "1", "-o", path("i")})
                  .code,
              0);
    std::istringstream profiles(slurp(dir_ / "i" / "profiles_2008_once_rho1.csv"));
    auto p = read_profiles(profiles);
    ASSERT_EQ(p.size(), 2u);
    ASSERT_EQ(call({"plot", path("i/profiles_2008_once_rho1.csv"), "-o", path("p")}).code, 0);
    EXPECT_NE(slurp(dir_ / "p" / "scatter.svg").find("class=\"bank\""), std::string::npos);

    ASSERT_EQ(call({"synth", "--year", "2008,2009", "--banks", "12", "-o", path("m")}).code, 0);
    ASSERT_EQ(call({"group-shock", "--input", path("m/market.csv"), "--ensemble-size", "2", "--psi-count", "6", "-o",
                    path("g")})
                  .code,
              0);
    ASSERT_EQ(call({"plot", path("g/results.csv"), "-o", path("h")}).code, 0);
    const auto svg = slurp(dir_ / "h" / "heatmap_once.svg");
    EXPECT_EQ(svg, [&] {
        call({"plot", path("g/results.csv"), "-o", path("h2")});
        return slurp(dir_ / "h2" / "heatmap_once.svg");
    }());
    EXPECT_EQ(call({"plot", path("banks.csv"), "-o", path("bad")}).code, 2);
}

TEST_F(CliTest, Leverage) {
    ASSERT_EQ(call({"leverage", "--input", path("banks.csv"), "--year", "2008", "--ensemble-size", "3", "--density",
                    "0.99", "--rho", "1", "-o", path("l")})
                  .code,
              0);
    const auto lev = slurp(dir_ / "l" / "leverage_2008_rho1.csv");
    EXPECT_EQ(lev.rfind("bank_id,leverage,ext_leverage,nu\n", 0), 0u);
    EXPECT_TRUE(fs::exists(dir_ / "l" / "histograms_2008_rho1.csv"));
}
