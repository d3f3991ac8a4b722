#pragma once

// Running configured experiments: preset configs, per-seed runs, pass/fail
// against the configured thresholds, and the on-disk artifacts (CSV, JSON
// summaries, gnuplot scripts).

#include "ptsm/config.hpp"
#include "ptsm/controllers.hpp"
#include "ptsm/csv.hpp"
#include "ptsm/plants.hpp"
#include "ptsm/sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ptsm {

// ---------------------------------------------------------------------------
// Presets.

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t count) {
  std::vector<std::uint64_t> s(count);
  std::iota(s.begin(), s.end(), first);
  return s;
}

inline ExperimentConfig manipulator_base(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.plant = PlantKind::manipulator;
  c.controller = ControllerKind::ptsm;
  c.Ts = 4.0;
  c.Tc = 6.0;
  c.gamma = 0.5;
  c.rho = 0.5;
  c.K = {25.0, 25.0};
  c.sigma1 = 14.0;
  c.sigma2 = 12.0;
  c.sigma3 = 10.0;
  c.sigma_m0_hat = 2.5;
  c.bounds = {0.0, 5.0, 5.0, 5.0};
  c.disturbance = DisturbanceKind::piecewise_constant_uniform;
  c.disturbance_bound = 5.0;
  c.q_range = 5.0;
  c.qdot_range = 5.0;
  c.seeds = seed_range(1, 5);
  c.sim.dt = 2e-5;
  c.sim.horizon = 15.0;
  c.sim.decimation = 50;
  return c;
}

inline const std::vector<std::string>& example_names() {
  static const std::vector<std::string> names{"example1", "example2a", "example2b", "example3", "fixed"};
  return names;
}

/// Built-in experiment definitions.
inline ExperimentConfig example_config(const std::string& name) {
  if (name == "example1") {
    ExperimentConfig c;
    c.name = name;
    c.plant = PlantKind::double_integrator;
    c.controller = ControllerKind::so_ptsm;
    c.Ts = 4.0;
    c.Tc = 6.0;
    c.gamma = 0.5;
    c.rho = 0.4;
    c.K = {10.0, 10.0};
    c.bounds = {5.0, 0.0, 0.0, 0.0};
    c.disturbance = DisturbanceKind::piecewise_constant_uniform;
    c.disturbance_bound = 5.0;
    c.q_range = 15.0;
    c.qdot_range = 15.0;
    c.seeds = seed_range(1, 10);
    c.sim.dt = 1e-4;
    c.sim.horizon = 15.0;
    c.sim.decimation = 10;
    return c;
  }
  if (name == "example2a") return manipulator_base(name);
  if (name == "example2b") {
    auto c = manipulator_base(name);
    c.Ts = 1.0;
    c.Tc = 1.0;
    c.sim.dt = 1e-5;
    c.sim.decimation = 100;
    return c;
  }
  if (name == "example3") {
    auto c = manipulator_base(name);
    c.controller = ControllerKind::tbg;
    c.epsilon = 0.1;
    return c;
  }
  if (name == "fixed") {
    auto c = manipulator_base(name);
    c.controller = ControllerKind::fixed;
    c.alpha = c.beta = 1.0;
    c.m1 = 5;
    c.n1 = 3;
    c.m2 = 3;
    c.n2 = 5;
    c.disturbance = DisturbanceKind::zero;
    c.disturbance_bound = 0.0;
    c.bounds.sigma_d = 0.0;
    return c;
  }
  throw std::invalid_argument("unknown example '" + name + "'");
}

// ---------------------------------------------------------------------------
// Single runs.

/// Initial state for `seed`: q_i uniform in [-q_range, q_range], qdot_i in
/// [-qdot_range, qdot_range], drawn from a stream separate from the disturbance.
inline ManipulatorState initial_state(const ExperimentConfig& cfg, std::uint64_t seed) {
  ManipulatorState x{RealVec(cfg.dof), RealVec(cfg.dof)};
  for (int i = 0; i < cfg.dof; ++i) {
    x.q[i] = cfg.q_range * (2.0 * detail::unit_interval(detail::keyed_word(seed, 0x1C0ull, std::uint64_t(i))) - 1.0);
    x.qdot[i] = cfg.qdot_range *
                (2.0 * detail::unit_interval(detail::keyed_word(seed, 0x1C0ull, std::uint64_t(cfg.dof + i))) - 1.0);
  }
  return x;
}

/// Smallest eigenvalue of M over a uniform grid of q in [-pi, pi]^n.
inline double min_inertia_eigenvalue(const ManipulatorModel& model, int per_axis = 121) {
  double lo = std::numeric_limits<double>::infinity();
  const int n = model.dof();
  std::vector<int> idx(std::size_t(n), 0);
  while (true) {
    ManipulatorState x{RealVec(n), RealVec::Zero(n)};
    for (int i = 0; i < n; ++i) x.q[i] = -std::numbers::pi + 2.0 * std::numbers::pi * idx[std::size_t(i)] / (per_axis - 1);
    Eigen::SelfAdjointEigenSolver<RealMat> es(model.terms(x).M, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    int k = 0;
    while (k < n && ++idx[std::size_t(k)] == per_axis) idx[std::size_t(k++)] = 0;
    if (k == n) break;
  }
  return lo;
}

struct RunResult {
  std::uint64_t seed = 0;
  ManipulatorState x0;
  SimLog log;
  std::optional<double> diverged_at;
  std::optional<double> settle_error;  // tol from the acceptance spec
  std::optional<double> settle_state;
  std::optional<double> settle_surface;
  double settle_limit = 0.0;  // bound the settling time is held to (0: not checked)
  double peak_error_after = 0.0;  // max ||e||_inf for t >= Ts + Tc
  double peak_state_after = 0.0;
  double energy10 = 0.0;
  // TBG only.
  std::optional<double> surface_at_Tc;
  std::optional<double> surface_radius;
  bool pass = false;
  std::vector<std::string> failures;
  double wall_seconds = 0.0;
};

inline double theoretical_settling(const ExperimentConfig& cfg) {
  if (cfg.controller == ControllerKind::fixed) return fixed_time_settling_bound(cfg.manip_gains());
  return cfg.Ts + cfg.Tc;
}

inline RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.seed = seed;
  r.x0 = initial_state(cfg, seed);
  SimConfig sim = cfg.sim;
  sim.seed = seed;
  const DisturbanceModel dm{cfg.disturbance, cfg.disturbance_bound, seed};

  std::optional<ManipulatorModel> nominal;
  if (cfg.plant == PlantKind::double_integrator) {
    r.log = integrate(DoubleIntegratorPlant{cfg.dof}, SecondOrderController{cfg.second_order_gains(), sim.sgn},
                      ReferenceTrajectory::zero(cfg.dof), dm, sim, r.x0);
  } else {
    nominal = ManipulatorModel::two_link(manipulator_preset(cfg.nominal_params));
    const ManipulatorPlant plant{ManipulatorModel::two_link(manipulator_preset(cfg.true_params))};
    const ManipController ctrl{cfg.manip_law(), cfg.manip_gains(), *nominal, sim.sgn};
    r.log = integrate(plant, ctrl, ReferenceTrajectory::two_link_circle(), dm, sim, r.x0);
  }
  r.diverged_at = r.log.diverged_at;

  const double tol = cfg.acceptance.tol;
  r.settle_error = settling_time(r.log, tol, SeriesKind::error);
  r.settle_state = settling_time(r.log, tol, SeriesKind::state);
  r.settle_surface = settling_time(r.log, tol, SeriesKind::surface);
  const double t_f = cfg.Ts + cfg.Tc;
  r.peak_error_after = peak_over(r.log, t_f, cfg.sim.horizon, SeriesKind::error);
  r.peak_state_after = peak_over(r.log, t_f, cfg.sim.horizon, SeriesKind::state);
  if (!r.diverged_at && r.log.t.back() >= 10.0 - 1e-9) r.energy10 = energy(r.log, 10.0);

  if (r.diverged_at) r.failures.push_back("diverged at t = " + format_double(*r.diverged_at));

  const bool check_settling = cfg.controller != ControllerKind::tbg || cfg.acceptance.settle_by.has_value();
  if (check_settling) {
    r.settle_limit = cfg.acceptance.settle_by.value_or(theoretical_settling(cfg));
    const auto& settle = cfg.plant == PlantKind::double_integrator ? r.settle_state : r.settle_error;
    if (!settle || *settle > r.settle_limit + 1e-9) {
      r.failures.push_back("settling " + (settle ? format_double(*settle) : std::string("never")) + " > " +
                           format_double(r.settle_limit));
    }
  }
  if (cfg.controller == ControllerKind::tbg && !r.diverged_at) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      if (std::abs(r.log.t[i] - cfg.Tc) < std::abs(r.log.t[k] - cfg.Tc)) k = i;
    }
    r.surface_at_Tc = r.log.s[k].norm();
    r.surface_radius = tbg_surface_radius(cfg.epsilon, r.log.V.front(), min_inertia_eigenvalue(*nominal));
    if (*r.surface_at_Tc > *r.surface_radius * (1.0 + cfg.acceptance.radius_slack)) {
      r.failures.push_back("||s(Tc)|| = " + format_double(*r.surface_at_Tc) + " exceeds radius " +
                           format_double(*r.surface_radius));
    }
  }
  r.pass = r.failures.empty();
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// Runs every seed, fanning out to at most `jobs` worker threads. Results are
/// returned in seed-list order regardless of completion order.
inline std::vector<RunResult> run_seeds(const ExperimentConfig& cfg, unsigned jobs = 1) {
  cfg.validate();
  std::vector<RunResult> results(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfg.seeds.size();) {
      try {
        results[i] = run_single(cfg, cfg.seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(cfg.seeds.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

// ---------------------------------------------------------------------------
// Reports and artifacts.

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const GainVerdict& v) {
  return {{"condition", to_string(v.condition)}, {"pass", v.pass}, {"lambda_min", v.lambda_min},
          {"threshold", v.threshold}, {"margin", v.margin}, {"detail", v.detail}};
}

inline GainVerdict experiment_gain_check(const ExperimentConfig& cfg) {
  if (cfg.plant == PlantKind::double_integrator) {
    return check_gains(GainCondition::second_order, cfg.second_order_gains(), cfg.bounds);
  }
  return check_gains(cfg.gain_condition(), cfg.manip_gains(), cfg.bounds);
}

inline nlohmann::json run_summary(const ExperimentConfig& cfg, const RunResult& r, const GainVerdict& gv) {
  nlohmann::json j;
  j["run_id"] = cfg.name + "/seed_" + std::to_string(r.seed);
  j["seed"] = r.seed;
  j["q0"] = std::vector<double>(r.x0.q.begin(), r.x0.q.end());
  j["qdot0"] = std::vector<double>(r.x0.qdot.begin(), r.x0.qdot.end());
  j["config"] = serialize_config(cfg);
  j["gain_check"] = to_json(gv);
  j["diverged_at"] = optional_json(r.diverged_at);
  j["settling"] = {{"tol", cfg.acceptance.tol},
                   {"error", optional_json(r.settle_error)},
                   {"state", optional_json(r.settle_state)},
                   {"surface", optional_json(r.settle_surface)},
                   {"limit", r.settle_limit > 0.0 ? nlohmann::json(r.settle_limit) : nlohmann::json(nullptr)}};
  j["peak_error_after_Tf"] = r.peak_error_after;
  j["peak_state_after_Tf"] = r.peak_state_after;
  j["energy_0_10"] = r.energy10;
  if (r.surface_at_Tc) {
    j["tbg"] = {{"surface_norm_at_Tc", *r.surface_at_Tc},
                {"radius", *r.surface_radius},
                {"slack", cfg.acceptance.radius_slack}};
  }
  j["pass"] = r.pass;
  j["failures"] = r.failures;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

/// gnuplot script for the run CSVs of one experiment: phase portraits,
/// error/state traces, surface and torque traces.
inline std::string plot_script(const ExperimentConfig& cfg) {
  const int n = cfg.dof;
  auto col = [n](int block, int i) { return 2 + block * n + i; };  // 1-based column index
  std::string s = "# gnuplot script generated for experiment '" + cfg.name + "'\n";
  s += "set datafile separator ','\nset key off\nset grid\nset term pngcairo size 1200,800\n";
  auto each_run = [&](const std::string& using_expr) {
    std::string out;
    for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
      out += (k ? ", \\\n     " : "plot ") + std::string("'seed_") + std::to_string(cfg.seeds[k]) +
             "/log.csv' every ::1 using " + using_expr + " with lines";
    }
    return out + "\n";
  };
  for (int i = 0; i < n; ++i) {
    const auto id = std::to_string(i + 1);
    s += "set output 'phase_" + id + ".png'\nset xlabel 'e" + id + "'\nset ylabel 'ed" + id + "'\n";
    s += each_run(std::to_string(col(2, i)) + ":" + std::to_string(col(3, i)));
  }
  const char* blocks[] = {"q", "qd", "e", "ed", "s", "tau"};
  for (int b = 0; b < 6; ++b) {
    for (int i = 0; i < n; ++i) {
      const auto id = std::string(blocks[b]) + std::to_string(i + 1);
      s += "set output '" + id + ".png'\nset xlabel 't [s]'\nset ylabel '" + id + "'\n";
      s += each_run("1:" + std::to_string(col(b, i)));
    }
  }
  return s;
}

struct ExperimentOutcome {
  std::vector<RunResult> runs;
  GainVerdict gain_check;
  nlohmann::json report;
  bool all_pass = false;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  os << text;
}

/// Runs all seeds and, when `out_dir` is non-empty, writes
///   <out>/<name>/config.cfg, report.json, plot.gp
///   <out>/<name>/seed_<k>/log.csv, summary.json
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                        unsigned jobs = 1) {
  cfg.validate();
  ExperimentOutcome out;
  out.gain_check = experiment_gain_check(cfg);
  out.runs = run_seeds(cfg, jobs);

  out.all_pass = std::all_of(out.runs.begin(), out.runs.end(), [](const RunResult& r) { return r.pass; });
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : out.runs) runs.push_back(run_summary(cfg, r, out.gain_check));
  out.report = {{"experiment", cfg.name},
                {"plant", to_string(cfg.plant)},
                {"controller", to_string(cfg.controller)},
                {"gain_check", to_json(out.gain_check)},
                {"gain_check_informational", true},
                {"runs", runs},
                {"all_pass", out.all_pass}};

  if (!out_dir.empty()) {
    const auto base = out_dir / cfg.name;
    std::filesystem::create_directories(base);
    write_text(base / "config.cfg", serialize_config(cfg));
    for (const auto& r : out.runs) {
      const auto dir = base / ("seed_" + std::to_string(r.seed));
      std::filesystem::create_directories(dir);
      write_csv((dir / "log.csv").string(), r.log);
      write_text(dir / "summary.json", run_summary(cfg, r, out.gain_check).dump(2) + "\n");
    }
    write_text(base / "report.json", out.report.dump(2) + "\n");
    write_text(base / "plot.gp", plot_script(cfg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy comparison of the three manipulator laws on matched conditions.

struct ComparisonOutcome {
  std::map<std::string, std::vector<double>> energies;  // law -> per-seed E over [0, 10]
  std::map<std::string, double> mean_energy;
  bool tbg_below_ptsm = false;
  nlohmann::json report;
};

inline ComparisonOutcome compare_controllers(const ExperimentConfig& base, const std::filesystem::path& out_dir,
                                             unsigned jobs = 1) {
  if (base.plant != PlantKind::manipulator) throw std::invalid_argument("compare: needs the manipulator plant");
  ComparisonOutcome cmp;
  nlohmann::json per_law;
  for (auto kind : {ControllerKind::ptsm, ControllerKind::tbg, ControllerKind::fixed}) {
    ExperimentConfig cfg = base;
    cfg.controller = kind;
    cfg.name = "compare_" + std::string(to_string(kind));
    const auto res = run_experiment(cfg, out_dir, jobs);
    auto& e = cmp.energies[to_string(kind)];
    for (const auto& r : res.runs) e.push_back(r.energy10);
    cmp.mean_energy[to_string(kind)] = std::accumulate(e.begin(), e.end(), 0.0) / double(e.size());
    per_law[to_string(kind)] = {{"energy_0_10", e}, {"mean", cmp.mean_energy[to_string(kind)]}};
  }
  cmp.tbg_below_ptsm = cmp.mean_energy["tbg"] < cmp.mean_energy["ptsm"];
  std::size_t seeds_ordered = 0;
  for (std::size_t i = 0; i < base.seeds.size(); ++i) {
    if (cmp.energies["tbg"][i] < cmp.energies["ptsm"][i]) ++seeds_ordered;
  }
  cmp.report = {{"seeds", base.seeds},
                {"laws", per_law},
                {"tbg_below_ptsm_mean", cmp.tbg_below_ptsm},
                {"tbg_below_ptsm_seed_count", seeds_ordered}};
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "compare.json", cmp.report.dump(2) + "\n");
  }
  return cmp;
}

}  // namespace ptsm
