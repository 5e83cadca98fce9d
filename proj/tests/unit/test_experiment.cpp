#include "hadamard/error.hpp"
#include "hadamard/experiment.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace hadamard;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("hadamard_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string message_of(const std::string& json)
{
    try {
        parse_config(json);
    } catch (const InvalidInput& e) {
        return e.what();
    }
    return "";
}

const char* kInterval = R"({"kind": "spectrum", "domain": {"kind": "interval", "size": [3.141592653589793], "resolution": 200},
                            "solver": {"k": 6}})";

} // namespace

TEST(Config, ErrorsNameTheField)
{
    EXPECT_EQ(message_of("{").rfind("config:", 0), 0u);
    EXPECT_EQ(message_of(R"({"domain": {"kind": "interval", "resolution": 4}})").rfind("kind:", 0), 0u);
    EXPECT_EQ(message_of(R"({"kind": "spectrum", "domain": {"kind": "interval", "resolution": 4}, "colour": 1})")
                  .rfind("colour: unknown field", 0),
              0u);
    EXPECT_EQ(message_of(R"({"kind": "spectrum", "domain": {"kind": "interval", "resolution": 4, "extra": 1}})")
                  .rfind("domain.extra", 0),
              0u);
    EXPECT_EQ(message_of(R"({"kind": "spectrum", "domain": {"kind": "interval", "resolution": 0}})")
                  .rfind("domain.resolution", 0),
              0u);
    EXPECT_EQ(message_of(R"({"kind": "spectrum", "domain": {"kind": "interval", "resolution": 4}, "fields": {"psi": -1}})")
                  .rfind("fields.psi", 0),
              0u);
    EXPECT_EQ(message_of(R"({"kind": "ricci-flow", "flow": {"dim": 3, "times": [0.0, 0.3]}})").rfind("flow.times", 0), 0u);
    EXPECT_EQ(message_of(R"({"kind": "ricci-flow", "flow": {"dim": 3, "times": [0.1], "epsilon": 0.5}})")
                  .rfind("flow.epsilon", 0),
              0u);
    EXPECT_EQ(message_of(R"({"kind": "split", "domain": {"kind": "square", "size": [1, 1], "resolution": 4}, "split": {"mode": "both"}})")
                  .rfind("split.mode", 0),
              0u);
    EXPECT_EQ(message_of(R"({"kind": "spectrum", "domain": {"kind": "interval", "resolution": 4}, "fd": {"steps": [0.01, 0.02]}})")
                  .rfind("fd.steps", 0),
              0u);
}

TEST(Config, OverridesAndHash)
{
    ConfigOverrides ov;
    ov.seed = 99;
    ov.output = "elsewhere";
    const ExperimentConfig c = parse_config(kInterval, ov);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.output, fs::path("elsewhere"));
    EXPECT_NE(fnv1a_hex(c.canonical), fnv1a_hex(parse_config(kInterval).canonical));
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");

    ov.kind = ExperimentKind::Split;
    EXPECT_THROW(parse_config(kInterval, ov), InvalidInput);
}

TEST(Run, IntervalSpectrumAndDeterminism)
{
    const fs::path a = scratch("spec_a"), b = scratch("spec_b");
    ConfigOverrides ov;
    ov.output = a;
    const RunManifest m = run_config(parse_config(kInterval, ov));
    EXPECT_TRUE(m.metric.pass);
    EXPECT_EQ(m.metric.name, "max_rel_err_analytic");
    EXPECT_LE(m.metric.value, 5e-3);
    ov.output = b;
    run_config(parse_config(kInterval, ov));
    EXPECT_EQ(slurp(a / "spectrum.csv"), slurp(b / "spectrum.csv"));
    EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));

    const auto rows = emit_report({a / "manifest.json", b / "manifest.json"});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].experiment, "spectrum");
    const std::string csv = report_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "experiment,key_metric,value,tolerance,pass");

    fs::remove(b / "spectrum.csv");
    try {
        emit_report({a / "manifest.json", b / "manifest.json"});
        FAIL() << "expected a missing-artifact error";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("spectrum.csv"), std::string::npos);
    }
    EXPECT_THROW(emit_report({a / "nope.json"}), InvalidInput);

    const std::string empty = report_csv(emit_report({}));
    EXPECT_EQ(empty, "experiment,key_metric,value,tolerance,pass\n");
}

TEST(Run, InvalidConfigWritesNothing)
{
    const fs::path dir = scratch("invalid");
    ConfigOverrides ov;
    ov.output = dir;
    const std::string bad =
        R"({"kind": "vary-domain", "domain": {"kind": "flat-torus", "size": [6.28], "resolution": 6}, "bc": "t-neumann"})";
    EXPECT_THROW(run_config(parse_config(bad, ov)), InvalidInput);
    EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, SeedControlsRandomArtifacts)
{
    const std::string cfg = R"({"kind": "split", "domain": {"kind": "square", "size": [3.141592653589793, 3.141592653589793], "resolution": 12},
                               "fields": {"family": "fixed"}, "target": {"lambda": 5.0}, "solver": {"cluster_tol": 0.01},
                               "split": {"trials": 4}})";
    const fs::path a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("seed_c");
    ConfigOverrides ov;
    ov.seed = 7;
    ov.output = a;
    run_config(parse_config(cfg, ov));
    ov.output = b;
    run_config(parse_config(cfg, ov));
    ov.seed = 8;
    ov.output = c;
    run_config(parse_config(cfg, ov));
    EXPECT_EQ(slurp(a / "trials.csv"), slurp(b / "trials.csv"));
    EXPECT_NE(slurp(a / "trials.csv"), slurp(c / "trials.csv"));
}

#ifdef HADAMARD_CLI
namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(HADAMARD_CLI) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

} // namespace

TEST(Cli, ExitCodes)
{
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    const fs::path good = dir / "good.json";
    std::ofstream(good) << kInterval;
    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << R"({"kind": "spectrum", "domain": {"kind": "interval", "resolution": -3}})";

    EXPECT_EQ(run_cli("spectrum --config " + good.string() + " --out " + (dir / "run").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "run" / "manifest.json"));
    EXPECT_EQ(run_cli("report " + (dir / "run" / "manifest.json").string() + " --out " + (dir / "r.csv").string()), 0);
    EXPECT_EQ(run_cli("spectrum --config " + bad.string() + " --out " + (dir / "bad").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "bad"));
    EXPECT_EQ(run_cli("split --config " + good.string()), 2);
    EXPECT_EQ(run_cli("spectrum --config " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(run_cli("report " + (dir / "missing" / "manifest.json").string()), 2);
    EXPECT_EQ(run_cli("spectrum"), 2);
}
#endif
