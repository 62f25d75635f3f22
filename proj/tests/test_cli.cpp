#include "commands.hpp"
#include "config.hpp"

#include "porobiot/errors.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace porobiot;
using namespace porobiot::cli;
namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code;
    std::string log, err;
};

Invocation invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "porobiot");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream log, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), log, err);
    return {code, log.str(), err.str()};
}

class CliDir : public ::testing::Test {
  protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("porobiot_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    static std::string slurp(const std::string& p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static long rows(const std::string& p)
    {
        const auto s = slurp(p);
        return std::count(s.begin(), s.end(), '\n') - 1;
    }

    nlohmann::json manifest(const std::string& out) const { return nlohmann::json::parse(slurp(path(out) + "/manifest.json")); }

    fs::path dir_;
};

} // namespace

TEST(Config, DefaultsAndSources)
{
    auto c = Config::defaults();
    EXPECT_EQ(c.str("scheme.kind"), "splitting");
    EXPECT_DOUBLE_EQ(c.real("scheme.tol"), 1e-8);
    EXPECT_EQ(c.integer("scheme.max_iter"), 500);
    EXPECT_TRUE(c.is_auto("material.alpha"));
    EXPECT_EQ(c.source("scheme.tol"), Source::Default);

    c.set("scheme.tol", "1e-6", Source::File);
    EXPECT_EQ(c.source("scheme.tol"), Source::File);
    c.apply_override("scheme.tol=1e-9");
    EXPECT_DOUBLE_EQ(c.real("scheme.tol"), 1e-9);
    EXPECT_EQ(c.source("scheme.tol"), Source::Override);
    // A lower layer never replaces a higher one.
    c.set("scheme.tol", "1e-3", Source::File);
    EXPECT_DOUBLE_EQ(c.real("scheme.tol"), 1e-9);

    EXPECT_THROW(c.apply_override("scheme.bogus=1"), ConfigurationError);
    EXPECT_THROW(c.apply_override("no_equals_sign"), ConfigurationError);
    EXPECT_THROW((void)c.real("scheme.kind"), ConfigurationError);
}

TEST(Config, GridParsing)
{
    const auto l = parse_grid("x", "logspace(-2,2,9)");
    ASSERT_EQ(l.size(), 9u);
    EXPECT_NEAR(l.front(), 0.01, 1e-16);
    EXPECT_NEAR(l.back(), 100.0, 1e-12);
    const auto s = parse_grid("x", "linspace(0, 1, 5)");
    ASSERT_EQ(s.size(), 5u);
    EXPECT_DOUBLE_EQ(s[1], 0.25);
    const auto c = parse_grid("x", "0.125,0.0625,0.03125");
    ASSERT_EQ(c.size(), 3u);
    EXPECT_DOUBLE_EQ(c[2], 0.03125);
    EXPECT_EQ(parse_grid("x", "3").size(), 1u);
    EXPECT_THROW(parse_grid("x", "logspace(1,2)"), ConfigurationError);
    EXPECT_THROW(parse_grid("x", "1,abc"), ConfigurationError);
    EXPECT_TRUE(is_numeric("1e-3"));
    EXPECT_TRUE(is_numeric("logspace(-2,2,9)"));
    EXPECT_FALSE(is_numeric("theorem-safe"));
}

TEST_F(CliDir, FileUnknownKeyRejected)
{
    std::ofstream(path("bad.ini")) << "[scheme]\ntolerance = 1e-6\n";
    auto c = Config::defaults();
    EXPECT_THROW(c.load_file(path("bad.ini")), ConfigurationError);
    const auto r = invoke({"manufactured", "--config", path("bad.ini"), "--out", path("o")});
    EXPECT_EQ(r.code, kConfigError);
    EXPECT_THROW(c.load_file(path("missing.ini")), ConfigurationError);
}

TEST_F(CliDir, PrecedenceFileFlagSet)
{
    std::ofstream(path("run.ini")) << "[scheme]\ntol = 1e-6\nmax_iter = 77\n[problem]\ntau = 0.5\n";
    const auto r = invoke({"manufactured", "--config", path("run.ini"), "--h", "0.25", "--tol", "1e-7", "--set", "scheme.tol=1e-9",
                           "--out", path("o")});
    ASSERT_EQ(r.code, kSuccess) << r.err;
    const auto m = manifest("o");
    EXPECT_EQ(m["config"]["scheme.tol"]["value"], "1e-9");
    EXPECT_EQ(m["config"]["scheme.tol"]["source"], "override");
    EXPECT_EQ(m["config"]["scheme.max_iter"]["value"], "77");
    EXPECT_EQ(m["config"]["scheme.max_iter"]["source"], "file");
    EXPECT_EQ(m["config"]["problem.h"]["source"], "override");
    EXPECT_EQ(m["config"]["solver.linear"]["source"], "default");
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["exit_code"], 0);
}

TEST_F(CliDir, ExitCodes)
{
    EXPECT_EQ(invoke({"manufactured", "--h", "0.25", "--tau", "0.5", "--out", path("ok")}).code, kSuccess);
    EXPECT_EQ(invoke({"manufactured", "--no-such-flag"}).code, kConfigError);
    EXPECT_EQ(invoke({"manufactured", "--tau", "0.3", "--out", path("t")}).code, kConfigError);
    EXPECT_EQ(invoke({"manufactured", "--case", "t7c7", "--out", path("c")}).code, kConfigError);
    EXPECT_EQ(invoke({"nonsense"}).code, kConfigError);
    // Strong coupling without stabilization diverges.
    const auto r = invoke({"manufactured", "--h", "0.25", "--set", "material.alpha=50", "--L1", "0", "--L2", "0", "--out", path("d")});
    EXPECT_EQ(r.code, kSolverFailure);
    const auto m = manifest("d");
    EXPECT_EQ(m["exit_code"], 3);
    EXPECT_FALSE(m["error"].get<std::string>().empty());
}

TEST_F(CliDir, ManufacturedArtifactsAreDeterministic)
{
    for (const char* out : {"a", "b"}) {
        ASSERT_EQ(invoke({"manufactured", "--case", "t1c1", "--h", "0.125", "--refinements", "2", "--out", path(out)}).code, kSuccess);
    }
    for (const char* f : {"errors.csv", "trace_0.csv", "trace_1.csv"}) {
        ASSERT_TRUE(fs::exists(path("a") + "/" + f)) << f;
        EXPECT_EQ(slurp(path("a") + "/" + f), slurp(path("b") + "/" + f)) << f;
    }
    EXPECT_EQ(rows(path("a") + "/errors.csv"), 2);
}

TEST_F(CliDir, SweepHasOneRowPerCell)
{
    ASSERT_EQ(invoke({"sweep", "--case", "t1c1", "--h", "0.25", "--L1", "logspace(-2,2,9)", "--L2", "logspace(-2,2,9)", "--out", path("s")}).code,
              kSuccess);
    EXPECT_EQ(rows(path("s") + "/sweep.csv"), 81);
    const auto m = manifest("s");
    EXPECT_TRUE(m["results"].contains("argmin"));
}

TEST_F(CliDir, MandelShortRun)
{
    const auto r = invoke({"mandel", "--steps", "10", "--nx", "10", "--ny", "10", "--scheme", "monolithic", "--out", path("m")});
    ASSERT_EQ(r.code, kSuccess) << r.err;
    EXPECT_EQ(rows(path("m") + "/mandel.csv"), 11);
    const auto m = manifest("m");
    EXPECT_NEAR(m["results"]["p0"].get<double>(), 40.0, 1e-9);
}

TEST_F(CliDir, SensitivityAndVerify)
{
    ASSERT_EQ(invoke({"sensitivity", "--axis", "tau", "--values", "0.5,0.25", "--h", "0.25", "--out", path("se")}).code, kSuccess);
    EXPECT_EQ(rows(path("se") + "/sensitivity.csv"), 2);
    const auto v = invoke({"verify", "--case", "linear", "--h", "0.25", "--out", path("v")});
    EXPECT_EQ(v.code, kSuccess) << v.log;
    EXPECT_GT(rows(path("v") + "/verify.csv"), 0);
    EXPECT_EQ(slurp(path("v") + "/verify.csv").substr(0, 30), "check,value,threshold,verdict\n");
}
