#include "ptsm/config.hpp"
#include "ptsm/csv.hpp"
#include "ptsm/experiment.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace ptsm;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PTSM_CLI) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ptsm_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return ConfigError(-1, -1, "");
}

}  // namespace

TEST(Config, RoundTripsEveryPreset) {
  for (const auto& name : example_names()) {
    const auto cfg = example_config(name);
    const std::string text = serialize_config(cfg);
    const auto back = parse_config(text);
    EXPECT_EQ(back, cfg) << name;
    EXPECT_EQ(serialize_config(back), text) << name;
  }
}

TEST(Config, ShippedFilesMatchPresets) {
  for (const auto& name : example_names()) {
    const fs::path p = fs::path(PTSM_CONFIG_DIR) / (name + ".cfg");
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(slurp(p), serialize_config(example_config(name))) << name;
  }
}

TEST(Config, PartialFileKeepsDefaults) {
  const auto cfg = parse_config("# comment\n[experiment]\nname = tiny   # trailing\nseeds = 4, 9\n\n[sim]\nsgn = exact\n");
  EXPECT_EQ(cfg.name, "tiny");
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{4, 9}));
  EXPECT_EQ(cfg.sim.sgn.mode, SgnMode::exact);
  EXPECT_EQ(cfg.Ts, ExperimentConfig{}.Ts);
}

TEST(Config, ErrorsCarryLocation) {
  auto e = parse_error("[experiment]\nname = x\n  colour = red\n");
  EXPECT_EQ(e.line, 3);
  EXPECT_EQ(e.column, 3);

  e = parse_error("[experiment]\n[nonsense]\n");
  EXPECT_EQ(e.line, 2);

  e = parse_error("[sim]\ndt = 1e-4\ndt = 2e-4\n");
  EXPECT_EQ(e.line, 3);

  e = parse_error("[sim]\ndt = fast\n");
  EXPECT_EQ(e.line, 2);
  EXPECT_EQ(e.column, 6);

  e = parse_error("dt = 1\n");
  EXPECT_EQ(e.line, 1);

  e = parse_error("[sim]\nhorizon\n");
  EXPECT_EQ(e.line, 2);

  e = parse_error("[gains]\nK =\n");
  EXPECT_EQ(e.line, 2);
}

TEST(Config, DimensionMismatchRejected) {
  const auto e = parse_error("[experiment]\ndof = 2\n[gains]\nK = 25, 25, 25\n");
  EXPECT_EQ(e.line, 0);
  EXPECT_NE(std::string(e.what()).find("K"), std::string::npos);
}

TEST(Csv, HeaderContract) {
  const auto h = csv_header(2);
  const std::vector<std::string> want{"t",  "q1",  "q2",  "qd1", "qd2", "e1",   "e2",   "ed1", "ed2",
                                      "s1", "s2",  "tau1", "tau2", "d1", "d2", "V"};
  EXPECT_EQ(h, want);
}

TEST(Csv, LosslessRoundTrip) {
  auto cfg = example_config("example2a");
  cfg.sim.horizon = 0.2;
  const auto r = run_single(cfg, 3);
  std::stringstream ss;
  write_csv(ss, r.log);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), r.log.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    ASSERT_EQ(back.t[i], r.log.t[i]);
    ASSERT_EQ(back.q[i], r.log.q[i]);
    ASSERT_EQ(back.qdot[i], r.log.qdot[i]);
    ASSERT_EQ(back.e[i], r.log.e[i]);
    ASSERT_EQ(back.edot[i], r.log.edot[i]);
    ASSERT_EQ(back.s[i], r.log.s[i]);
    ASSERT_EQ(back.tau[i], r.log.tau[i]);
    ASSERT_EQ(back.d[i], r.log.d[i]);
    ASSERT_EQ(back.V[i], r.log.V[i]);
  }
}

TEST(Csv, RejectsWrongHeader) {
  std::istringstream is("t,q1,x\n0,1,2\n");
  EXPECT_ANY_THROW(read_csv(is));
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("example nosuch"), 2);
  EXPECT_EQ(run_cli("example example1 --sgn maybe"), 2);
  EXPECT_EQ(run_cli("run /nonexistent/file.cfg"), 2);
}

TEST(Cli, MalformedConfigLeavesNoOutput) {
  const auto dir = scratch("malformed");
  fs::create_directories(dir);
  const auto cfg = dir / "bad.cfg";
  std::ofstream(cfg) << "[experiment]\nname = bad\nwibble = 1\n";
  const auto out = dir / "out";
  EXPECT_EQ(run_cli("run " + cfg.string() + " --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));

  std::ofstream(cfg) << "[experiment]\nname = bad\ndof = 2\n[gains]\nK = 1\n";
  EXPECT_EQ(run_cli("run " + cfg.string() + " --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
  fs::remove_all(dir);
}

TEST(Cli, SeedListSetsRunCount) {
  const auto dir = scratch("seeds");
  fs::create_directories(dir);
  auto c = example_config("example1");
  c.name = "three";
  c.seeds = {3, 5, 8};
  c.sim.horizon = 0.5;
  c.acceptance.settle_by = 100.0;
  std::ofstream(dir / "three.cfg") << serialize_config(c);
  run_cli("run " + (dir / "three.cfg").string() + " --out " + (dir / "out").string());
  int runs = 0;
  for (const auto& entry : fs::directory_iterator(dir / "out" / "three")) {
    if (entry.is_directory()) {
      ++runs;
      EXPECT_TRUE(fs::exists(entry.path() / "log.csv"));
      EXPECT_TRUE(fs::exists(entry.path() / "summary.json"));
    }
  }
  EXPECT_EQ(runs, 3);
  fs::remove_all(dir);
}

TEST(Cli, ConfigEchoMatchesExample) {
  const auto dir = scratch("echo");
  EXPECT_EQ(run_cli("example example1 --out " + (dir / "a").string()), 0);
  EXPECT_EQ(run_cli("run " + std::string(PTSM_CONFIG_DIR) + "/example1.cfg --out " + (dir / "b").string()), 0);
  for (int seed = 1; seed <= 10; ++seed) {
    const std::string rel = "example1/seed_" + std::to_string(seed) + "/log.csv";
    const std::string a = slurp(dir / "a" / rel);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "b" / rel)) << rel;
  }
  EXPECT_EQ(slurp(dir / "a/example1/config.cfg"), slurp(dir / "b/example1/config.cfg"));
  const auto rep = nlohmann::json::parse(slurp(dir / "a/report.json"));
  EXPECT_TRUE(rep["all_pass"].get<bool>());
  EXPECT_EQ(rep["experiments"][0]["settling_error"].size(), 10u);
  fs::remove_all(dir);
}

TEST(Cli, OverridesApply) {
  const auto dir = scratch("override");
  EXPECT_EQ(run_cli("example example1 --seed 7 --horizon 12 --dt 2e-4 --sgn exact --layer-width 0.01 --out " +
                    dir.string()),
            0);
  const auto cfg = load_config((dir / "example1/config.cfg").string());
  EXPECT_EQ(cfg.seeds, std::vector<std::uint64_t>{7});
  EXPECT_EQ(cfg.sim.horizon, 12.0);
  EXPECT_EQ(cfg.sim.dt, 2e-4);
  EXPECT_EQ(cfg.sim.sgn.mode, SgnMode::exact);
  EXPECT_EQ(cfg.sim.sgn.width, 0.01);
  EXPECT_TRUE(fs::exists(dir / "example1/seed_7/log.csv"));
  EXPECT_TRUE(fs::exists(dir / "example1/plot.gp"));
  fs::remove_all(dir);
}

TEST(Cli, AcceptanceFailureExitsOne) {
  const auto dir = scratch("fail");
  fs::create_directories(dir);
  auto c = example_config("example1");
  c.name = "too_strict";
  c.seeds = {1};
  c.sim.horizon = 2.0;
  c.acceptance.settle_by = 1.0;
  std::ofstream(dir / "s.cfg") << serialize_config(c);
  EXPECT_EQ(run_cli("run " + (dir / "s.cfg").string()), 1);
  fs::remove_all(dir);
}

TEST(Cli, SweepRunsAllConfigs) {
  const auto dir = scratch("sweep");
  fs::create_directories(dir);
  for (std::string name : {"sa", "sb"}) {
    auto c = example_config("example1");
    c.name = name;
    c.seeds = {1, 2};
    c.sim.horizon = 11.0;
    std::ofstream(dir / (name + ".cfg")) << serialize_config(c);
  }
  EXPECT_EQ(run_cli("sweep " + (dir / "sa.cfg").string() + " " + (dir / "sb.cfg").string() + " --jobs 2 --out " +
                    (dir / "out").string()),
            0);
  EXPECT_EQ(slurp(dir / "out/sa/seed_2/log.csv"), slurp(dir / "out/sb/seed_2/log.csv"));
  const auto rep = nlohmann::json::parse(slurp(dir / "out/report.json"));
  EXPECT_EQ(rep["experiments"].size(), 2u);
  fs::remove_all(dir);
}

TEST(Cli, ValidateReportsMargins) {
  const auto dir = scratch("validate");
  EXPECT_EQ(run_cli("validate --out " + dir.string()), 0);
  const auto rep = nlohmann::json::parse(slurp(dir / "validate.json"));
  EXPECT_TRUE(rep["all_pass"].get<bool>());
  bool saw_margin = false, saw_negative_control = false;
  for (const auto& p : rep["properties"]) {
    if (p["name"] == "gains_example2") {
      saw_margin = true;
      EXPECT_EQ(p["measured"].get<double>(), -5.0);
      EXPECT_TRUE(p["informational"].get<bool>());
      EXPECT_FALSE(p["pass"].get<bool>());
    }
    if (p["name"] == "tbg_negative_control_detected") {
      saw_negative_control = true;
      EXPECT_TRUE(p["pass"].get<bool>());
      EXPECT_NE(p["detail"].get<std::string>().find("at t = "), std::string::npos);
    }
  }
  EXPECT_TRUE(saw_margin);
  EXPECT_TRUE(saw_negative_control);
  fs::remove_all(dir);
}
