#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cheeger/run.hpp"

using namespace cheeger;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return resolve_config(read_config(in));
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cheeger_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int status = -1;
  std::string out;
};

// Runs the built front end with the given arguments.
CliResult cli(const std::string& args, const fs::path& dir) {
  const char* exe = std::getenv("CHEEGER_CLI");
  if (exe == nullptr) return {};
  const auto log = dir / "stdout.txt";
  const std::string command = std::string(exe) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(command.c_str());
  CliResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(log);
  return r;
}

#define REQUIRE_CLI()                                                            \
  if (std::getenv("CHEEGER_CLI") == nullptr) GTEST_SKIP() << "CHEEGER_CLI unset"

}  // namespace

TEST(Config, ComplianceThresholdIsNamed) {
  EXPECT_EQ(parse_error("command=minimize\nalpha=2.1\nmode=compliance\nN=2\n"),
            "alpha must be < 1+2/N = 2");
}

TEST(Config, EigenThresholdIsNamed) {
  EXPECT_EQ(parse_error("command=minimize\nalpha=1.1\nmode=eigen\nN=2\n"),
            "alpha must be < 2/N = 1");
}

TEST(Config, MinimalFileGetsDefaults) {
  const auto c = parse("command = solve-torsion\n");
  const RunConfig d;
  EXPECT_EQ(c.command, Command::solve_torsion);
  EXPECT_EQ(c.domain.to_string(), d.domain.to_string());
  EXPECT_EQ(c.dim, 2);
  EXPECT_EQ(c.resolution, 64);
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.problem, Problem::compliance);
  EXPECT_EQ(c.threads, 1);
  EXPECT_EQ(c.seed, 0u);
}

TEST(Config, Errors) {
  EXPECT_NE(parse_error("command=minimize\ncolour=blue\n").find("unknown key 'colour'"),
            std::string::npos);
  EXPECT_NE(parse_error("alpha=1\n").find("command"), std::string::npos);
  EXPECT_NE(parse_error("command=dance\n"), "");
  EXPECT_NE(parse_error("command=minimize\nresolution=4\nalpha=1\n"), "");
  EXPECT_NE(parse_error("command=minimize\nalpha=abc\n"), "");
  EXPECT_NE(parse_error("command=verify\ncheck=nonsense\n"), "");
  EXPECT_NE(parse_error("command=minimize\nthreads=0\n"), "");
  EXPECT_NE(parse_error("command=minimize\nnot a setting\n").find("config line 2"),
            std::string::npos);
}

TEST(Config, SweepNeedsTwoAlphas) {
  EXPECT_NE(parse_error("command=sweep-alpha\nalphas=1.0\n").find(">=2 required"),
            std::string::npos);
  const auto c = parse("command=sweep-alpha\nalphas=1.5,0.5\n");
  EXPECT_EQ(c.alphas, (std::vector<double>{0.5, 1.5}));
}

TEST(Config, ThresholdOnlyForTheScalingCheck) {
  EXPECT_NO_THROW(parse("command=verify\ncheck=scaling\nalpha=2\n"));
  EXPECT_NO_THROW(parse("command=verify\ncheck=scaling\nmode=eigen\nalpha=1\n"));
  EXPECT_THROW(parse("command=verify\ncheck=optimality\nalpha=2\n"), InvalidArgument);
}

TEST(Config, CommentsAndOverrides) {
  const auto c = parse("# a run\ncommand=minimize  # trailing\nalpha=1.2\nalpha=1.4\n\n");
  EXPECT_EQ(c.alpha, 1.4);
}

TEST(Config, WrittenConfigReadsBack) {
  const auto c = parse(
      "command=minimize\nmethod=search\ndomain=lshape(1)\nalpha=1.25\nseed=7\nradii=0.1,0.2\n");
  std::ostringstream out;
  write_config(out, c);
  const auto back = parse(out.str());
  std::ostringstream again;
  write_config(again, back);
  EXPECT_EQ(out.str(), again.str());
}

// ---------------------------------------------------------------------------

TEST(Run, InProcessTorsionManifest) {
  const auto dir = scratch("inproc");
  auto c = parse("command=solve-torsion\ndomain=disk(1)\nresolution=32\n");
  c.output_dir = dir.string();
  std::ostringstream out, err;
  EXPECT_EQ(run_guarded(c, out, err), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  EXPECT_TRUE(fs::exists(dir / "field_w.csv"));
  EXPECT_TRUE(fs::exists(dir / "field_w.pgm"));
  // the manifest reads back as the config of its run
  const auto back = resolve_config(read_config_file((dir / "manifest.txt").string()));
  EXPECT_EQ(back.domain.to_string(), c.domain.to_string());
  EXPECT_EQ(back.resolution, c.resolution);
}

TEST(Run, SolverErrorsMapToExitTwo) {
  const auto dir = scratch("solver");
  auto c = parse("command=solve-torsion\nresolution=32\ntorsion_tol=1e-300\n");
  c.output_dir = dir.string();
  std::ostringstream out, err;
  EXPECT_EQ(run_guarded(c, out, err), kExitSolver);
  EXPECT_NE(err.str().find("error:"), std::string::npos);
}

TEST(Cli, SolveTorsionOnTheDisk) {
  REQUIRE_CLI();
  const auto dir = scratch("torsion");
  const auto r = cli("solve-torsion 'domain=disk(1)' resolution=256 output_dir=" + dir.string(), dir);
  ASSERT_EQ(r.status, 0) << r.out;
  const auto text = slurp(dir / "manifest.txt");
  const auto pos = text.find("result.compliance = ");
  ASSERT_NE(pos, std::string::npos);
  const double c = std::stod(text.substr(pos + 20));
  EXPECT_NEAR(c, std::numbers::pi / 8, 0.005 * std::numbers::pi / 8);
  EXPECT_TRUE(fs::exists(dir / "field_w.csv"));
  EXPECT_TRUE(fs::exists(dir / "field_w.pgm"));
}

TEST(Cli, VerifyScalingAtTheThresholdPasses) {
  REQUIRE_CLI();
  const auto dir = scratch("scaling");
  const auto r = cli("verify scaling alpha=2 output_dir=" + dir.string(), dir);
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("PASS scaling"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "report_scaling.csv"));
}

TEST(Cli, OracleRefusesAFiveByFiveRegion) {
  REQUIRE_CLI();
  const auto dir = scratch("oracle");
  // square(0.75) at 8 nodes per unit length: 5 x 5 inside nodes
  const auto r = cli("oracle 'domain=square(0.75)' resolution=8 alpha=0.5 output_dir=" + dir.string(), dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("25 inside nodes"), std::string::npos) << r.out;
}

TEST(Cli, OracleOnAFourByFourRegion) {
  REQUIRE_CLI();
  const auto dir = scratch("oracle4");
  const auto r = cli("oracle 'domain=square(0.625)' resolution=8 alpha=0.5 output_dir=" + dir.string(), dir);
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "omega.mask"));
}

TEST(Cli, SingleAlphaSweepIsAUsageError) {
  REQUIRE_CLI();
  const auto dir = scratch("sweep1");
  const auto r = cli("sweep-alpha alphas=1.0 output_dir=" + dir.string(), dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find(">=2 required"), std::string::npos) << r.out;
}

TEST(Cli, ThresholdNamedOnTheCommandLine) {
  REQUIRE_CLI();
  const auto dir = scratch("threshold");
  const auto r = cli("minimize relaxed alpha=2.1 N=2", dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("alpha must be < 1+2/N = 2"), std::string::npos) << r.out;
}

TEST(Cli, SameSeedGivesIdenticalCsv) {
  REQUIRE_CLI();
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const std::string args = "minimize search 'domain=square(1)' resolution=10 alpha=1.8 restarts=2 seed=3 ";
  ASSERT_EQ(cli(args + "output_dir=" + a.string(), a).status, 0);
  ASSERT_EQ(cli(args + "output_dir=" + b.string(), b).status, 0);
  for (const char* name : {"field_v.csv", "report_trace.csv"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    EXPECT_FALSE(slurp(a / name).empty()) << name;
  }
}

TEST(Cli, ConfigFileAndArgumentOverride) {
  REQUIRE_CLI();
  const auto dir = scratch("config");
  {
    std::ofstream f(dir / "run.cfg");
    f << "command = export\ndomain = lshape(1)\nresolution = 16\n";
  }
  const auto r = cli("--config " + (dir / "run.cfg").string() + " resolution=20 output_dir=" +
                         (dir / "out").string(),
                     dir);
  ASSERT_EQ(r.status, 0) << r.out;
  const auto back = resolve_config(read_config_file((dir / "out" / "manifest.txt").string()));
  EXPECT_EQ(back.command, Command::export_domain);
  EXPECT_EQ(back.resolution, 20);
  EXPECT_TRUE(fs::exists(dir / "out" / "domain.mask"));
}

TEST(Cli, UnknownKeyIsAUsageError) {
  REQUIRE_CLI();
  const auto dir = scratch("unknown");
  EXPECT_EQ(cli("solve-torsion colour=blue", dir).status, 1);
}
