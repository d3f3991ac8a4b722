// ptsm: run the built-in experiments, configured runs, sweeps, the energy
// comparison and the property suites.
//
// Exit status: 0 all runs finished and passed, 1 an acceptance threshold
// failed or a run diverged, 2 usage, config or runtime error.

#include "ptsm/config.hpp"
#include "ptsm/experiment.hpp"
#include "ptsm/validate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ptsm;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt, horizon, layer_width;
  std::optional<std::string> sgn;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "run this seed only");
    app->add_option("--dt", dt, "integration step [s]")->check(CLI::PositiveNumber);
    app->add_option("--horizon", horizon, "simulated time [s]")->check(CLI::PositiveNumber);
    app->add_option("--sgn", sgn, "sign function")->check(CLI::IsMember({"exact", "layer"}));
    app->add_option("--layer-width", layer_width, "boundary layer width")->check(CLI::PositiveNumber);
  }

  void apply(ExperimentConfig& cfg) const {
    if (seed) cfg.seeds = {*seed};
    if (dt) cfg.sim.dt = *dt;
    if (horizon) cfg.sim.horizon = *horizon;
    if (sgn) cfg.sim.sgn.mode = *sgn == "exact" ? SgnMode::exact : SgnMode::boundary_layer;
    if (layer_width) cfg.sim.sgn.width = *layer_width;
  }
};

void print_runs(const ExperimentOutcome& o) {
  const auto& rep = o.report;
  std::cout << rep["experiment"].get<std::string>() << " (" << rep["controller"].get<std::string>()
            << "): gain check " << (o.gain_check.pass ? "PASS" : "FAIL") << " margin "
            << format_double(o.gain_check.margin) << " (informational)\n";
  for (const auto& r : o.runs) {
    std::cout << "  seed " << r.seed << ": " << (r.pass ? "PASS" : "FAIL");
    if (r.settle_error) std::cout << "  settle(e) " << format_double(*r.settle_error);
    if (r.surface_at_Tc) std::cout << "  |s(Tc)| " << format_double(*r.surface_at_Tc) << " radius "
                                   << format_double(*r.surface_radius);
    std::cout << "  E10 " << format_double(r.energy10);
    for (const auto& f : r.failures) std::cout << "  [" << f << "]";
    std::cout << "\n";
  }
}

nlohmann::json aggregate(const std::vector<ExperimentOutcome>& outs) {
  nlohmann::json exps = nlohmann::json::array();
  bool all = true;
  for (const auto& o : outs) {
    nlohmann::json settle = nlohmann::json::array();
    for (const auto& r : o.runs) settle.push_back(optional_json(r.settle_error));
    exps.push_back({{"experiment", o.report["experiment"]},
                    {"all_pass", o.all_pass},
                    {"gain_check", o.report["gain_check"]},
                    {"settling_error", settle}});
    all = all && o.all_pass;
  }
  return {{"experiments", exps}, {"all_pass", all}};
}

int run_configs(std::vector<ExperimentConfig> cfgs, const Overrides& ov, const std::string& out, unsigned jobs) {
  // Validate everything before touching the filesystem.
  for (auto& c : cfgs) {
    ov.apply(c);
    c.validate();
  }
  std::vector<ExperimentOutcome> outs;
  for (const auto& c : cfgs) {
    outs.push_back(run_experiment(c, out, jobs));
    print_runs(outs.back());
  }
  const auto agg = aggregate(outs);
  if (!out.empty()) write_text(fs::path(out) / "report.json", agg.dump(2) + "\n");
  return agg["all_pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predefined-time sliding mode control simulations"};
  app.require_subcommand(1);
  std::string out;
  unsigned jobs = 1;

  auto* ex = app.add_subcommand("example", "run a built-in experiment");
  std::string ex_name;
  ex->add_option("name", ex_name, "experiment name")->required()->check(CLI::IsMember(example_names()));
  ex->add_option("--out", out, "output directory");
  ex->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  Overrides ex_ov;
  ex_ov.add_to(ex);

  auto* run = app.add_subcommand("run", "run a configuration file");
  std::string cfg_path;
  run->add_option("config", cfg_path, "configuration file")->required();
  run->add_option("--out", out, "output directory");
  Overrides run_ov;
  run_ov.add_to(run);

  auto* sweep = app.add_subcommand("sweep", "run several configuration files on a worker pool");
  std::vector<std::string> sweep_paths;
  sweep->add_option("configs", sweep_paths, "configuration files")->required();
  sweep->add_option("--out", out, "output directory");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  Overrides sweep_ov;
  sweep_ov.add_to(sweep);

  auto* cmp = app.add_subcommand("compare", "energy of the ptsm, tbg and fixed-time laws on matched runs");
  std::string base = "example2a";
  std::string cmp_cfg;
  cmp->add_option("--base", base, "built-in manipulator experiment")->check(CLI::IsMember(example_names()));
  cmp->add_option("--config", cmp_cfg, "configuration file used instead of --base");
  cmp->add_option("--out", out, "output directory");
  cmp->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  Overrides cmp_ov;
  cmp_ov.add_to(cmp);

  auto* val = app.add_subcommand("validate", "run the property suites");
  val->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*ex) return run_configs({example_config(ex_name)}, ex_ov, out, jobs);
    if (*run) return run_configs({load_config(cfg_path)}, run_ov, out, 1);
    if (*sweep) {
      std::vector<ExperimentConfig> cfgs;
      for (const auto& p : sweep_paths) cfgs.push_back(load_config(p));
      return run_configs(std::move(cfgs), sweep_ov, out, std::max(1u, jobs));
    }
    if (*cmp) {
      auto cfg = cmp_cfg.empty() ? example_config(base) : load_config(cmp_cfg);
      cmp_ov.apply(cfg);
      cfg.validate();
      const auto c = compare_controllers(cfg, out, jobs);
      for (const auto& [law, m] : c.mean_energy) std::cout << law << ": mean E[0,10] = " << format_double(m) << "\n";
      std::cout << "tbg below ptsm: " << (c.tbg_below_ptsm ? "yes" : "no") << "\n";
      return c.tbg_below_ptsm ? 0 : 1;
    }
    if (*val) {
      const auto results = run_property_suite();
      const auto rep = to_json(results);
      for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  measured " << format_double(r.measured)
                  << (r.informational ? "  (informational)" : "") << "\n";
      }
      if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / "validate.json", rep.dump(2) + "\n");
      }
      return rep["all_pass"].get<bool>() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
