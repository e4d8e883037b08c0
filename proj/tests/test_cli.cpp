#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli_app.hpp"

using namespace excursion;
using json = nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "excursion-iia");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("excursion_cli_" + name);
}

}  // namespace

TEST(Cli, MissingLevelIsUsageError) {
    EXPECT_EQ(invoke({"iia"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"clipped-cov"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"gp-sim"}).code, cli::kExitUsage);
}

TEST(Cli, UnknownFlagAndSubcommand) {
    EXPECT_EQ(invoke({"iia", "--level", "0", "--bogus", "1"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"nonsense"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({}).code, cli::kExitUsage);
}

TEST(Cli, DomainErrors) {
    EXPECT_EQ(invoke({"iia", "--level", "0", "--model", "cauchy"}).code, cli::kExitDomain);
    EXPECT_EQ(invoke({"iia", "--level", "0", "--reps", "1"}).code, cli::kExitDomain);
    EXPECT_EQ(invoke({"switch-sim", "--plus", "weibull:2"}).code, cli::kExitDomain);
}

TEST(Cli, MonotonicityViolationIsNumerical) {
    const auto r = invoke({"iia", "--level", "1.5", "--samples", "1000", "--reps", "2"});
    EXPECT_EQ(r.code, cli::kExitNumerical);
    EXPECT_NE(r.err.find("E_minus"), std::string::npos);
}

TEST(Cli, IiaJsonDeterministic) {
    const std::vector<std::string> args{"iia", "--level", "0", "--samples", "20000", "--reps", "3", "--seed", "5"};
    const auto a = invoke(args);
    const auto b = invoke(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto j = json::parse(a.out);
    EXPECT_EQ(j["alpha"].get<double>(), 0.5);
    EXPECT_NEAR(j["theta_plus"].get<double>(), j["theta_minus"].get<double>(), 0.03);
    EXPECT_EQ(j["ci_plus"].size(), 2u);
    EXPECT_EQ(j["reps"].get<int>(), 3);
    EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
    const auto manifest = json::parse(a.err);
    EXPECT_EQ(manifest["config_hash"], j["config_hash"]);
    EXPECT_EQ(manifest["version"], EXCURSION_VERSION);
    const auto c = invoke({"iia", "--level", "0", "--samples", "20000", "--reps", "3", "--seed", "6"});
    EXPECT_NE(json::parse(c.out)["config_hash"], j["config_hash"]);
}

TEST(Cli, ConfigFileMerges) {
    const auto cfg = scratch("config.json");
    {
        std::ofstream f(cfg);
        f << R"({"level": 0.5, "step": 0.5, "t-max": 2.0})";
    }
    const auto r = invoke({"clipped-cov", "--config", cfg.string(), "--t-max", "1.0"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
    std::filesystem::remove(cfg);
    EXPECT_EQ(invoke({"clipped-cov", "--config", "/nonexistent/x.json"}).code, cli::kExitDomain);
}

TEST(Cli, ClippedCovZeroLevelHasReference) {
    const auto r = invoke({"clipped-cov", "--level", "0", "--t-max", "1", "--step", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,value,arcsin_reference");
}

TEST(Cli, OutputFileAndManifest) {
    const auto out = scratch("slepian.csv");
    const auto r = invoke({"slepian-sample", "--level", "1", "--t-max", "1", "--step", "0.5", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream f(out);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "t,deterministic,slope_component,residual,total,replicate_id");
    std::ifstream mf(out.string() + ".manifest.json");
    ASSERT_TRUE(mf.good());
    const auto m = json::parse(mf);
    EXPECT_TRUE(m.contains("wall_clock"));
    EXPECT_TRUE(m.contains("provenance"));
    std::filesystem::remove(out);
    std::filesystem::remove(out.string() + ".manifest.json");
}

TEST(Cli, PersistencyRoundTrip) {
    const auto in = scratch("lengths.csv");
    {
        Rng rng = make_rng(3);
        std::vector<double> xs(100000);
        for (double& x : xs) x = -std::log(uniform_open(rng)) / 0.5;
        cli::detail::write_lengths_csv(in.string(), xs);
        EXPECT_EQ(cli::detail::read_lengths_csv(in.string()), xs);
    }
    const auto r = invoke({"persistency", "--input", in.string(), "--reps", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_NEAR(j["mean_theta"].get<double>(), 0.5, 0.02);
    std::filesystem::remove(in);
}

TEST(Cli, SwitchSim) {
    const auto r = invoke({"switch-sim", "--paths", "2000", "--horizon", "2", "--step", "1", "--stationary"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,value,stderr");
}

TEST(Cli, Version) {
    const auto r = invoke({"--version"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(EXCURSION_VERSION), std::string::npos);
}
