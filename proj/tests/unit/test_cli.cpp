#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "thermolim/cli/config.hpp"
#include "thermolim/harness/records.hpp"

using namespace thermolim;
using namespace thermolim::cli;

namespace
{
struct RunResult
{
    int code{-1};
    std::string output;
};

RunResult run_cli(std::string const& args, std::string const& env = {})
{
    std::string cmd = env + " " + THERMOLIM_CLI_PATH + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe)
    {
        return r;
    }
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe))
    {
        r.output += buf.data();
    }
    int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class CliFiles : public ::testing::Test
{
  protected:
    void SetUp() override
    {
        dir_ = std::filesystem::temp_directory_path()
               / ("thermolim_cli_" + std::to_string(::getpid()) + "_"
                  + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string path(std::string const& name) const { return (dir_ / name).string(); }

    static std::string slurp(std::string const& p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }

    std::filesystem::path dir_;
};

bool has_diag(std::vector<Diagnostic> const& ds, std::string const& field,
              std::string const& reason)
{
    for (auto const& d : ds)
    {
        if (d.field == field && d.reason == reason)
        {
            return true;
        }
    }
    return false;
}
}  // namespace

//---------------------------------------------------------------------------//
// Configuration
//---------------------------------------------------------------------------//

TEST(ValidateConfig, DefaultIsValid)
{
    EXPECT_TRUE(validate_config(Config{}).empty());
    Config c;
    c.command = "limit-ref";
    EXPECT_TRUE(validate_config(c).empty());
}

TEST(ValidateConfig, Diagnostics)
{
    Config c;
    c.tau = -0.1;
    EXPECT_TRUE(has_diag(validate_config(c), "tau", "tau must be ≥ 0"));

    c = {};
    c.eta.b = 1.5;
    EXPECT_TRUE(has_diag(validate_config(c), "eta", "b∈(0,1] required"));

    c = {};
    c.ell = {2, 1};
    EXPECT_TRUE(has_diag(validate_config(c), "ell[1]", "ell grid must be increasing"));

    c = {};
    c.model = "lattice";
    c.model_params = {{"bogus", 1}};
    auto ds = validate_config(c);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].field, "model");

    c = {};
    c.domains = {"ball:3", "torus:1", "ball:-1"};
    ds = validate_config(c);
    EXPECT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds[0].field, "domains[1]");
    EXPECT_EQ(ds[1].field, "domains[2]");

    c = {};
    c.command = "report";
    EXPECT_TRUE(has_diag(validate_config(c), "in", "report needs an input results file"));

    c = {};
    c.command = "audit";
    c.check = "A5";
    c.ell = {0.5, 2};
    EXPECT_TRUE(has_diag(validate_config(c), "ell[0]", "ell must be >= 1"));
}

TEST(ParseDomain, Kinds)
{
    EXPECT_NEAR(*parse_domain("ball:2").volume_hint(), 32.0 / 3 * std::numbers::pi, 1e-12);
    EXPECT_NEAR(*parse_domain("cube:3").volume_hint(), 27, 1e-12);
    EXPECT_NEAR(*parse_domain("simplex:2").volume_hint(), 8.0 / 24, 1e-12);
    EXPECT_NEAR(*parse_domain("lshape:2").volume_hint(), 56, 1e-12);
    EXPECT_THROW(parse_domain("ball"), Error);
    EXPECT_THROW(parse_domain("ball:x"), Error);
    EXPECT_THROW(parse_domain("ball:2x"), Error);
    EXPECT_THROW(parse_domain("ring:2"), Error);
}

TEST(ConfigJson, AppliesFields)
{
    Config c;
    apply_config_json(nlohmann::json::parse(R"({
        "model": {"name": "lattice", "params": {"z": 0.5}},
        "ell": [1, 3], "seed": 9, "eta": {"b": 0.5}, "domains": ["ball:4"]})"),
                      c);
    EXPECT_EQ(c.model, "lattice");
    EXPECT_EQ(c.model_params.at("z"), 0.5);
    EXPECT_EQ(c.ell, (std::vector<double>{1, 3}));
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.eta.b, 0.5);
    EXPECT_EQ(c.domains.size(), 1u);
    EXPECT_THROW(apply_config_json(nlohmann::json::array(), c), Error);
}

//---------------------------------------------------------------------------//
// Integration
//---------------------------------------------------------------------------//

TEST_F(CliFiles, LimitRefPersistsCurve)
{
    auto out = path("results.jsonl");
    auto r = run_cli("limit-ref --model local-sin --ell 2,4,8,16 --g-samples 32 --samples 200000 "
                     "--seed 1 --out "
                     + out);
    EXPECT_EQ(r.code, 0) << r.output;
    auto recs = read_records(out);
    EXPECT_EQ(recs.size(), 4u * 32u);
    EXPECT_NE(r.output.find("e_bar="), std::string::npos);
}

TEST_F(CliFiles, ReportWritesCsv)
{
    auto out = path("results.jsonl");
    auto csv = path("curve.csv");
    ASSERT_EQ(run_cli("limit-ref --ell 2,4 --g-samples 3 --samples 2000 --out " + out).code, 0);
    auto r = run_cli("report --in " + out + " --csv " + csv);
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("residual"), std::string::npos);
    auto text = slurp(csv);
    EXPECT_EQ(text.rfind("experiment,param,value,stderr,volume,normalized,seed\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);

    std::ofstream(out, std::ios::app) << "not json\n";
    auto bad = run_cli("report --in " + out);
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.output.find("line 7"), std::string::npos) << bad.output;
}

TEST(Cli, SsaExhaustiveReportsZeroViolations)
{
    auto r = run_cli("ssa --fn gaussian --ground 8 --exhaustive --seed 1");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("0 violations"), std::string::npos) << r.output;
}

TEST(Cli, SsaBrokenFixtureFails)
{
    auto r = run_cli("ssa --fn broken --ground 6 --exhaustive");
    EXPECT_EQ(r.code, 1) << r.output;
    EXPECT_NE(r.output.find("worst:"), std::string::npos);
}

TEST(Cli, BrokenFixtureAuditFailsWithWitness)
{
    auto r = run_cli("audit --model broken-fixture --check A2");
    EXPECT_EQ(r.code, 1) << r.output;
    EXPECT_NE(r.output.find("worst: A2"), std::string::npos) << r.output;
}

TEST(Cli, PassingAuditsExitZero)
{
    EXPECT_EQ(run_cli("audit --model lattice --check A1").code, 0);
    EXPECT_EQ(run_cli("audit --model lattice --check A2 --samples 20000").code, 0);
    auto a6 = run_cli("audit --model lattice --check A6 --ell 8 --g-samples 8");
    EXPECT_EQ(a6.code, 0) << a6.output;
    EXPECT_NE(a6.output.find("exact_regrouping=yes"), std::string::npos);
}

TEST(Cli, UsageErrors)
{
    auto unknown = run_cli("audit --frobnicate 3");
    EXPECT_EQ(unknown.code, 2);
    EXPECT_NE(unknown.output.find("Usage"), std::string::npos) << unknown.output;
    EXPECT_NE(unknown.output.find("--model"), std::string::npos);

    EXPECT_EQ(run_cli("").code, 2);
    EXPECT_EQ(run_cli("explode").code, 2);

    auto tau = run_cli("tiling-check --tau -1");
    EXPECT_EQ(tau.code, 2);
    EXPECT_NE(tau.output.find("tau must be ≥ 0"), std::string::npos) << tau.output;

    auto eta = run_cli("limit-general --eta-b 1.5");
    EXPECT_EQ(eta.code, 2);
    EXPECT_NE(eta.output.find("b∈(0,1] required"), std::string::npos) << eta.output;

    EXPECT_EQ(run_cli("audit --model lattice --param zz=1").code, 2);
    EXPECT_EQ(run_cli("audit --model lattice --param z").code, 2);
    EXPECT_EQ(run_cli("ssa --threads 1", "THERMOLIM_THREADS=abc").code, 0);
    EXPECT_EQ(run_cli("ssa", "THERMOLIM_THREADS=abc").code, 2);
    EXPECT_EQ(run_cli("--help").code, 0);
}

TEST_F(CliFiles, FlagsOverrideConfigFile)
{
    auto cfg = path("cfg.json");
    std::ofstream(cfg) << R"({"model": {"name": "local-const", "params": {"c": 3}},
                              "ell": [1, 2], "g_samples": 2, "samples": 500, "seed": 4})";
    auto a = path("a.jsonl");
    auto b = path("b.jsonl");
    ASSERT_EQ(run_cli("limit-ref --config " + cfg + " --out " + a).code, 0);
    ASSERT_EQ(run_cli("limit-ref --config " + cfg + " --seed 5 --param c=2 --out " + b).code, 0);
    auto ra = read_records(a);
    auto rb = read_records(b);
    ASSERT_EQ(ra.size(), 4u);
    ASSERT_EQ(rb.size(), 4u);
    EXPECT_NEAR(ra[0].normalized, 3, 1e-12);
    EXPECT_NEAR(rb[0].normalized, 2, 1e-12);
    EXPECT_NE(ra[0].seed, rb[0].seed);

    std::ofstream(path("bad.json")) << "{ nope";
    EXPECT_EQ(run_cli("limit-ref --config " + path("bad.json")).code, 2);
    EXPECT_EQ(run_cli("limit-ref --config " + path("missing.json")).code, 2);
}

TEST_F(CliFiles, ResultsByteIdenticalAcrossThreadCounts)
{
    std::string args = " --model lattice --ell 2,4 --g-samples 6 --seed 3 --out ";
    std::string general = " --model local-sin --domain ball:3,lshape:4 --samples 20000 --seed 3 --out ";
    std::vector<std::string> files;
    for (int t : {1, 2, 5})
    {
        auto out = path("t" + std::to_string(t) + ".jsonl");
        ASSERT_EQ(run_cli("limit-ref --threads " + std::to_string(t) + args + out).code, 0);
        ASSERT_EQ(run_cli("limit-general" + general + out,
                          "THERMOLIM_THREADS=" + std::to_string(t))
                      .code,
                  0);
        ASSERT_EQ(run_cli("lower-bound --model lattice --samples 20000 --threads "
                          + std::to_string(t) + " --out " + out)
                      .code,
                  0);
        files.push_back(slurp(out));
    }
    EXPECT_FALSE(files[0].empty());
    EXPECT_EQ(files[0], files[1]);
    EXPECT_EQ(files[0], files[2]);
}

TEST(Cli, TilingCheckPasses)
{
    auto r = run_cli("tiling-check --samples 100000 --domain ball:6 --ell 1,2 --delta 0.5");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("double_cover=0"), std::string::npos) << r.output;
}
