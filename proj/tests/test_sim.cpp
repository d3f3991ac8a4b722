#include "ptsm/experiment.hpp"
#include "ptsm/sim.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace ptsm;

namespace {

struct ZeroController {
  int dim;
  ControlSample operator()(double, const ManipulatorState& x, const ReferenceSample& r) const {
    const RealVec z = RealVec::Zero(dim);
    return {z, x.q - r.q, x.qdot - r.omega, z, 0.0};
  }
};

/// tau = +k q: pushes the double integrator away until it overflows.
struct RunawayController {
  ControlSample operator()(double, const ManipulatorState& x, const ReferenceSample&) const {
    const RealVec tau = 1e200 * x.q.array().square().matrix() + 1e6 * x.q;
    return {tau, x.q, x.qdot, x.q, 0.0};
  }
};

SimLog synthetic(const std::vector<double>& t, const std::vector<double>& e) {
  SimLog log;
  log.t = t;
  for (double v : e) {
    const RealVec x{{v}};
    log.q.push_back(x);
    log.qdot.push_back(x);
    log.e.push_back(x);
    log.edot.push_back(x);
    log.s.push_back(x);
    log.tau.push_back(x);
    log.d.push_back(x);
    log.V.push_back(0.0);
  }
  return log;
}

/// Example runs shared between tests; each (name, seed) is simulated once.
const RunResult& cached_run(const std::string& name, std::uint64_t seed) {
  static std::map<std::pair<std::string, std::uint64_t>, RunResult> cache;
  auto key = std::make_pair(name, seed);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, run_single(example_config(name), seed)).first;
  return it->second;
}

}  // namespace

TEST(Integrate, RestIsPreserved) {
  SimConfig cfg;
  cfg.horizon = 1.0;
  const auto log = integrate(DoubleIntegratorPlant{2}, ZeroController{2}, ReferenceTrajectory::zero(2),
                             DisturbanceModel{DisturbanceKind::zero, 0.0, 1}, cfg,
                             {RealVec::Zero(2), RealVec::Zero(2)});
  for (std::size_t i = 0; i < log.size(); ++i) {
    ASSERT_EQ(log.q[i], RealVec::Zero(2));
    ASSERT_EQ(log.qdot[i], RealVec::Zero(2));
  }
}

TEST(Integrate, LogShape) {
  SimConfig cfg;
  cfg.horizon = 0.5;
  cfg.decimation = 7;
  const auto log = integrate(DoubleIntegratorPlant{2}, ZeroController{2}, ReferenceTrajectory::zero(2),
                             DisturbanceModel{DisturbanceKind::piecewise_constant_uniform, 5.0, 1}, cfg,
                             {RealVec::Zero(2), RealVec::Zero(2)});
  ASSERT_GT(log.size(), 2u);
  for (auto* series : {&log.q, &log.qdot, &log.e, &log.edot, &log.s, &log.tau, &log.d}) {
    EXPECT_EQ(series->size(), log.size());
  }
  EXPECT_EQ(log.V.size(), log.size());
  for (std::size_t i = 1; i + 1 < log.size(); ++i) {
    EXPECT_NEAR(log.t[i] - log.t[i - 1], 7e-4, 1e-12);
    EXPECT_LE(log.d[i].lpNorm<Eigen::Infinity>(), 5.0);
  }
  // 5000 steps at decimation 7: the last logged step is 4998.
  EXPECT_DOUBLE_EQ(log.t.back(), 4998 * 1e-4);
}

TEST(Integrate, DivergenceRecorded) {
  SimConfig cfg;
  cfg.horizon = 1.0;
  const auto log = integrate(DoubleIntegratorPlant{1}, RunawayController{}, ReferenceTrajectory::zero(1),
                             DisturbanceModel{DisturbanceKind::zero, 0.0, 1}, cfg, {RealVec{{1.0}}, RealVec{{0.0}}});
  ASSERT_TRUE(log.diverged_at.has_value());
  EXPECT_LT(*log.diverged_at, 1.0);
  for (const auto& q : log.q) EXPECT_TRUE(q.allFinite());
}

TEST(Integrate, DimensionMismatchRejected) {
  SimConfig cfg;
  EXPECT_THROW(integrate(DoubleIntegratorPlant{2}, ZeroController{2}, ReferenceTrajectory::zero(2),
                         DisturbanceModel{}, cfg, {RealVec::Zero(3), RealVec::Zero(3)}),
               std::invalid_argument);
}

TEST(Integrate, Deterministic) {
  auto cfg = example_config("example1");
  cfg.sim.horizon = 3.0;
  const auto a = run_single(cfg, 4), b = run_single(cfg, 4);
  EXPECT_EQ(a.log.t, b.log.t);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    ASSERT_EQ(a.log.q[i], b.log.q[i]);
    ASSERT_EQ(a.log.tau[i], b.log.tau[i]);
    ASSERT_EQ(a.log.d[i], b.log.d[i]);
  }
}

TEST(Integrate, DecimationNeutral) {
  auto cfg = example_config("example2a");
  cfg.sim.horizon = 0.5;
  cfg.sim.decimation = 1;
  const auto fine = run_single(cfg, 2);
  cfg.sim.decimation = 13;
  const auto coarse = run_single(cfg, 2);
  ASSERT_GT(coarse.log.size(), 10u);
  for (std::size_t i = 0; i < coarse.log.size(); ++i) {
    const std::size_t j = 13 * i;
    ASSERT_EQ(coarse.log.t[i], fine.log.t[j]);
    ASSERT_EQ(coarse.log.q[i], fine.log.q[j]);
    ASSERT_EQ(coarse.log.qdot[i], fine.log.qdot[j]);
    ASSERT_EQ(coarse.log.tau[i], fine.log.tau[j]);
  }
}

TEST(Integrate, Example1ConvergesByTen) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto& r = cached_run("example1", seed);
    ASSERT_FALSE(r.diverged_at);
    ASSERT_TRUE(r.settle_error.has_value());
    EXPECT_LE(*r.settle_error, 10.0) << "seed " << seed;
    EXPECT_LE(*r.settle_state, 10.0) << "seed " << seed;
    EXPECT_LE(*r.settle_surface, 10.0) << "seed " << seed;
  }
}

TEST(Integrate, StepSizeRobustness) {
  // Compared mid-transient: once converged the error sits at a ~1e-8
  // chattering floor whose relative change says nothing about the step.
  auto cfg = example_config("example1");
  cfg.sim.horizon = 3.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double a = run_single(cfg, seed).log.e.back().lpNorm<Eigen::Infinity>();
    auto half = cfg;
    half.sim.dt = 5e-5;
    half.sim.decimation = 20;
    const double b = run_single(half, seed).log.e.back().lpNorm<Eigen::Infinity>();
    EXPECT_LT(std::abs(a - b), 0.1 * a) << "seed " << seed;
  }
}

TEST(SettlingTime, EdgeCases) {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(settling_time(synthetic(t, {0, 0, 0, 0, 0}), 1e-2, SeriesKind::error), 0.0);
  EXPECT_EQ(settling_time(synthetic(t, {1, 0, 1, 0, 0}), 1e-2, SeriesKind::error), 3.0);
  EXPECT_FALSE(settling_time(synthetic(t, {1, 0, 0, 0, 1}), 1e-2, SeriesKind::error).has_value());
  EXPECT_EQ(settling_time(synthetic(t, {5, 0.5, 0.2, 0.001, 0.0}), 1e-2, SeriesKind::state), 3.0);
}

TEST(Energy, Examples) {
  std::vector<double> t;
  for (int i = 0; i <= 1000; ++i) t.push_back(0.015 * i);
  EXPECT_EQ(energy(synthetic(t, std::vector<double>(t.size(), 0.0)), 10.0), 0.0);
  EXPECT_NEAR(energy(synthetic(t, std::vector<double>(t.size(), -2.5)), 10.0), 25.0, 1e-12);
  std::vector<double> ramp;
  for (double v : t) ramp.push_back(std::sin(v));
  const auto log = synthetic(t, ramp);
  double prev = 0.0;
  for (double te = 0.0; te <= 15.0; te += 0.37) {
    const double e = energy(log, te);
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(LyapunovTrace, ZeroSurfaceGivesZero) {
  std::vector<double> t{0, 1, 2, 3};
  const auto tr = lyapunov_trace(synthetic(t, {0, 0, 0, 0}), LyapunovKind::half_sTs, {});
  for (double v : tr.V) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(tr.n_checked, 0u);
}

TEST(LyapunovTrace, Example2PreReachingDecrement) {
  // Decrement inequality checked while the surface is still outside the
  // boundary layer band (10 widths), for gains that pass the gain condition.
  auto cfg = example_config("example2a");
  cfg.bounds.sigma_d = 0.0;
  ASSERT_TRUE(check_gains(GainCondition::manipulator, cfg.manip_gains(), cfg.bounds).pass);
  cfg.sim.horizon = 2.0;
  cfg.sim.decimation = 1;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = run_single(cfg, seed);
    const double band = 10.0 * cfg.sim.sgn.width;
    std::optional<double> reached;
    for (std::size_t i = 0; i < r.log.size() && !reached; ++i) {
      if (r.log.s[i].lpNorm<Eigen::Infinity>() <= band) reached = r.log.t[i];
    }
    LyapunovSettings ls;
    ls.rho = cfg.rho;
    ls.Tc = cfg.Tc;
    ls.active_above = band;
    ls.nominal = ManipulatorModel::two_link(two_link_nominal());
    ls.t_max = reached;
    const auto tr = lyapunov_trace(r.log, LyapunovKind::half_sTM0s, ls);
    EXPECT_GT(tr.n_checked, 0u);
    EXPECT_LT(tr.violation_fraction(), 0.02) << "seed " << seed << ": " << tr.n_violations << " of "
                                             << tr.n_checked << " points violate";
  }
}

TEST(ClosedLoop, ReachingAndSliding) {
  const auto cfg = example_config("example2a");
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto& r = cached_run("example2a", seed);
    ASSERT_FALSE(r.diverged_at);
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      if (r.log.t[i] >= cfg.Tc) ASSERT_LT(r.log.s[i].lpNorm<Eigen::Infinity>(), 10 * cfg.sim.sgn.width) << seed;
      if (r.log.t[i] >= cfg.Tc + cfg.Ts) ASSERT_LT(r.log.e[i].lpNorm<Eigen::Infinity>(), 1e-2) << seed;
    }
  }
}

TEST(ClosedLoop, UndisturbedSettlesNoSlower) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto clean = example_config("example2a");
    clean.disturbance = DisturbanceKind::zero;
    clean.true_params = clean.nominal_params;
    const auto a = run_single(clean, seed);
    const auto& b = cached_run("example2a", seed);
    ASSERT_TRUE(a.settle_error && b.settle_error);
    EXPECT_LE(*a.settle_error, *b.settle_error) << "seed " << seed;
  }
}

TEST(ClosedLoop, ScaleFreeSettling) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto doubled = example_config("example2a");
    doubled.q_range *= 2;
    doubled.qdot_range *= 2;
    const auto a = run_single(doubled, seed);
    const auto& b = cached_run("example2a", seed);
    ASSERT_EQ(a.x0.q, RealVec(2 * b.x0.q));
    ASSERT_TRUE(a.settle_error && b.settle_error);
    EXPECT_NEAR(*a.settle_error, *b.settle_error, 0.05 * *b.settle_error) << "seed " << seed;
  }
}
