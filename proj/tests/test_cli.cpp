#include "btc/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using btc::io::json;

namespace {

std::string exe() {
    const char* p = std::getenv("BTC_EXE");
    return p ? p : "btc";
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("btc_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = exe() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json manifest(const fs::path& dir) { return json::parse(slurp(dir / "manifest.json")); }

std::vector<std::string> listing(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

} // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run(""), btc::cli::kExitUsage);
    EXPECT_EQ(run("nosuch"), btc::cli::kExitUsage);
    EXPECT_EQ(run("steady"), btc::cli::kExitUsage);  // --out is required
    EXPECT_EQ(run("steady --out " + scratch("big").string() + " --n 100000"), btc::cli::kExitUsage);
    EXPECT_EQ(run("traj --scheme nope --out " + scratch("scheme").string()), btc::cli::kExitUsage);
    EXPECT_EQ(run("--help"), btc::cli::kExitOk);
}

TEST(Cli, NumericalFailureExitCode) {
    // dt so large that the jump probability guard trips.
    const auto dir = scratch("numerical");
    EXPECT_EQ(run("traj --scheme jump --n 10 --theta 0 --dt 0.08 --record-every 0.08 --t-final 1 --out " + dir.string()),
              btc::cli::kExitNumerical);
}

TEST(Cli, SteadyWritesCsvAndManifest) {
    const auto dir = scratch("steady");
    ASSERT_EQ(run("steady --n 20 --omega-list 0,0.5,1.5 --out " + dir.string()), 0);
    std::vector<std::string> header;
    const auto rows = btc::io::read_csv(dir / "steady.csv", &header);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(header[0], "n");
    EXPECT_EQ(rows[0][0], 20.0);
    EXPECT_NEAR(rows[0][4], -1.0, 1e-9);  // omega = 0 row: m_z = -1
    const auto m = manifest(dir);
    EXPECT_EQ(m["command"], "steady");
    EXPECT_EQ(m["config"]["n"], 20);
    EXPECT_TRUE(m.contains("build_hash"));
    EXPECT_EQ(m["files"].size(), 1u);
}

TEST(Cli, RefusesOverwriteUnlessForced) {
    const auto dir = scratch("overwrite");
    const std::string args = "steady --n 6 --omega-list 0.5 --out " + dir.string();
    ASSERT_EQ(run(args), 0);
    const auto before = slurp(dir / "steady.csv");
    EXPECT_EQ(run(args), btc::cli::kExitUsage);
    EXPECT_EQ(slurp(dir / "steady.csv"), before);
    ASSERT_EQ(run(args + " --omega 0.5 --force"), 0);
    // Exactly one manifest after a forced rerun with different output set.
    ASSERT_EQ(run("traj --scheme jump --n 6 --t-final 2 --force --out " + dir.string()), 0);
    const auto names = listing(dir);
    EXPECT_EQ(std::count(names.begin(), names.end(), "manifest.json"), 1);
    EXPECT_EQ(std::count(names.begin(), names.end(), "steady.csv"), 0);
    EXPECT_EQ(manifest(dir)["files"].size() + 1, names.size());
}

TEST(Cli, ByteIdenticalAcrossRunsAndWorkerCounts) {
    const std::vector<std::string> commands{
        "traj --scheme jump --n 12 --t-final 5 --trajectories 3 --seed 9",
        "traj --scheme homodyne --n 12 --t-final 2 --trajectories 2 --seed 9",
        "scaling --model phase --n-list 20,40,80,160 --events 15 --burn-in 5 --seed 4",
        "tilt --n-list 8,10 --omega-list 0.5,1.5 --s-list -0.1,0,0.1",
        "steady --n 10 --omega-list 0.2,0.9,1.4",
    };
    int k = 0;
    for (const auto& c : commands) {
        const auto a = scratch("det_a" + std::to_string(k));
        const auto b = scratch("det_b" + std::to_string(k));
        const auto d = scratch("det_c" + std::to_string(k));
        ++k;
        ASSERT_EQ(run(c + " --workers 1 --out " + a.string()), 0) << c;
        ASSERT_EQ(run(c + " --workers 3 --out " + b.string()), 0) << c;
        ASSERT_EQ(run(c + " --workers 1 --out " + d.string()), 0) << c;
        const auto names = listing(a);
        ASSERT_EQ(names, listing(b)) << c;
        for (const auto& f : names) {
            EXPECT_EQ(slurp(a / f), slurp(b / f)) << c << " " << f;
            EXPECT_EQ(slurp(a / f), slurp(d / f)) << c << " " << f;
        }
    }
}

TEST(Cli, ConfigFileAndOverride) {
    const auto dir = scratch("config");
    fs::create_directories(dir.parent_path());
    const fs::path cfg = dir.parent_path() / "steady.cfg";
    {
        std::ofstream out(cfg);
        out << "# test config\nn = 8\nomega-list = 0.3,0.6\nforce = true\n";
    }
    ASSERT_EQ(run("steady --config " + cfg.string() + " --out " + dir.string()), 0);
    auto m = manifest(dir);
    EXPECT_EQ(m["config"]["n"], 8);
    EXPECT_EQ(btc::io::read_csv(dir / "steady.csv").size(), 2u);
    ASSERT_EQ(run("steady --config " + cfg.string() + " --n 5 --out " + dir.string()), 0);
    EXPECT_EQ(manifest(dir)["config"]["n"], 5);

    std::ofstream(cfg) << "this line has no equals sign\n";
    EXPECT_EQ(run("steady --config " + cfg.string() + " --out " + scratch("badcfg").string()), btc::cli::kExitUsage);
}

TEST(Cli, TrajectoryFiles) {
    const auto dir = scratch("traj");
    ASSERT_EQ(run("traj --scheme homodyne --n 10 --t-final 3 --out " + dir.string()), 0);
    std::vector<std::string> header;
    const auto rows = btc::io::read_csv(dir / "trajectory.csv", &header);
    EXPECT_EQ(rows.size(), 301u);
    EXPECT_TRUE(fs::exists(dir / "current.csv"));
    EXPECT_TRUE(fs::exists(dir / "current_smoothed.csv"));
    const auto m = manifest(dir);
    EXPECT_EQ(m["config"]["scheme"], "homodyne");
    EXPECT_EQ(m["config"]["seed"], 1);
}

TEST(Cli, SpectrumFromJumpFile) {
    const auto jr = scratch("spec_jumps");
    ASSERT_EQ(run("traj --scheme jump --n 20 --t-final 600 --out " + jr.string()), 0);
    const auto sp = scratch("spec");
    ASSERT_EQ(run("spectrum --n 20 --jumps " + (jr / "jumps.csv").string() + " --t-final 600 --out " + sp.string()),
              0);
    std::vector<std::string> header;
    const auto rows = btc::io::read_csv(sp / "spectrum.csv", &header);
    EXPECT_EQ(header[0], "freq_over_Omega");
    EXPECT_GT(rows.size(), 1000u);
    EXPECT_TRUE(manifest(sp)["results"].contains("peak_to_background"));
}

TEST(Cli, ValidatePasses) { EXPECT_EQ(run("validate"), 0); }

TEST(ConfigParser, KeyValueLines) {
    std::istringstream in("a = 1\n  # comment\nb=two # trailing\n\n");
    const auto m = btc::io::parse_config(in);
    EXPECT_EQ(m.size(), 2u);
    EXPECT_EQ(m.at("a"), "1");
    EXPECT_EQ(m.at("b"), "two");
    std::istringstream bad(" = 3\n");
    EXPECT_THROW(btc::io::parse_config(bad), std::invalid_argument);
}

TEST(ConfigParser, CommandLineWins) {
    const fs::path cfg = scratch("expand").parent_path() / "expand.cfg";
    std::ofstream(cfg) << "n = 7\nseed = 3\nforce = false\n";
    const auto out = btc::cli::detail::expand_config({"btc", "steady", "--config", cfg.string(), "--n=9"});
    EXPECT_EQ(std::count(out.begin(), out.end(), "--n"), 0);
    EXPECT_EQ(std::count(out.begin(), out.end(), "--seed"), 1);
    EXPECT_EQ(std::count(out.begin(), out.end(), "--force"), 0);
    EXPECT_EQ(out.back(), "--n=9");
}

TEST(Format, RoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) EXPECT_EQ(std::stod(btc::io::format_double(x)), x);
}
