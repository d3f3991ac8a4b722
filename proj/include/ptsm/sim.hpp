#pragma once

// Fixed-step closed-loop simulation and post-run analysis.

#include "ptsm/controllers.hpp"
#include "ptsm/plants.hpp"
#include "ptsm/rk4.hpp"
#include "ptsm/surfaces.hpp"
#include "ptsm/vecops.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptsm {

struct SimConfig {
  double dt = 1e-4;
  double horizon = 15.0;
  std::uint64_t seed = 1;
  SgnConfig sgn{};
  int decimation = 1;

  void validate() const {
    if (!(dt > 0.0) || !(horizon > 0.0) || !(dt < horizon))
      throw std::invalid_argument("SimConfig: need 0 < dt < horizon");
    if (decimation < 1) throw std::invalid_argument("SimConfig: decimation must be >= 1");
    if (sgn.mode == SgnMode::boundary_layer && !(sgn.width > 0.0))
      throw std::invalid_argument("SimConfig: boundary layer width must be positive");
  }
  long steps() const { return std::lround(horizon / dt); }
};

/// One controller evaluation: the torque plus the signals worth logging.
struct ControlSample {
  RealVec tau;
  RealVec e;
  RealVec edot;
  RealVec s;
  double V = 0.0;
};

struct SimLog {
  std::vector<double> t;
  std::vector<RealVec> q, qdot, e, edot, s, tau, d;
  std::vector<double> V;
  std::optional<double> diverged_at;

  std::size_t size() const { return t.size(); }
  int dof() const { return q.empty() ? 0 : int(q.front().size()); }
};

template <class P>
concept Plant = requires(const P& p, const ManipulatorState& x, const RealVec& v) {
  { p.dof() } -> std::convertible_to<int>;
  { p.acceleration(x, v, v) } -> std::convertible_to<RealVec>;
};

template <class C>
concept Controller = requires(const C& c, double t, const ManipulatorState& x,
                              const ReferenceSample& r) {
  { c(t, x, r) } -> std::convertible_to<ControlSample>;
};

// ---------------------------------------------------------------------------
// Plants.

struct DoubleIntegratorPlant {
  int dim = 2;
  int dof() const { return dim; }
  RealVec acceleration(const ManipulatorState&, const RealVec& tau, const RealVec& f) const {
    return tau + f;
  }
};

struct ManipulatorPlant {
  ManipulatorModel model;
  int dof() const { return model.dof(); }
  RealVec acceleration(const ManipulatorState& x, const RealVec& tau, const RealVec& d) const {
    return manip_rhs(model, x, tau, d);
  }
};

// ---------------------------------------------------------------------------
// Controllers.

struct SecondOrderController {
  SecondOrderGains gains;
  SgnConfig sgn{};
  Guards guards{};

  ControlSample operator()(double, const ManipulatorState& x, const ReferenceSample& r) const {
    const RealVec e = x.q - r.q;
    const RealVec ed = x.qdot - r.omega;
    auto c = so_tau(gains, e, ed, sgn, guards);
    const double V = 0.5 * c.s.squaredNorm();
    return {std::move(c.tau), e, ed, std::move(c.s), V};
  }
};

/// Manipulator controller: equivalent control from the nominal model plus one
/// of the three hitting laws. V = s' M0 s / 2.
struct ManipController {
  ManipLaw law = ManipLaw::ptsm;
  ManipGains gains;
  ManipulatorModel nominal;
  SgnConfig sgn{};
  Guards guards{};

  ControlSample operator()(double t, const ManipulatorState& x, const ReferenceSample& r) const {
    const Dynamics nom = nominal.terms(x);
    const RealVec e = x.q - r.q;
    const RealVec ed = x.qdot - r.omega;
    const RealVec s = ptsm_surface(e, ed, gains.Ts, gains.gamma);
    RealVec tau = manip_tau_eq(gains, e, ed, nom.M, nom.C, nom.g, x.qdot, guards);
    switch (law) {
      case ManipLaw::ptsm:
        tau += manip_tau_s_ptsm(gains, s, x.q, x.qdot, nom.C, sgn, guards);
        break;
      case ManipLaw::tbg:
        tau += manip_tau_s_tbg(gains, TbgPoly(gains.Tc), t, s, x.q, x.qdot, nom.C, sgn);
        break;
      case ManipLaw::fixed:
        tau += manip_tau_s_fixed(gains, s, x.q, x.qdot, nom.C, sgn);
        break;
    }
    const double V = 0.5 * s.dot(nom.M * s);
    return {std::move(tau), e, ed, s, V};
  }
};

// ---------------------------------------------------------------------------
// Integration.

/// RK4 with sample-and-hold: controller output and disturbance are evaluated
/// at the start of each step and held over it. The disturbance stream is keyed
/// on cfg.seed. A non-finite state stops the run and records the time.
template <Plant P, Controller C>
SimLog integrate(const P& plant, const C& controller, const ReferenceTrajectory& ref,
                 DisturbanceModel dm, const SimConfig& cfg, const ManipulatorState& x0) {
  cfg.validate();
  const int n = plant.dof();
  if (x0.q.size() != n || x0.qdot.size() != n || ref.dim() != n) {
    throw std::invalid_argument("integrate: dimension mismatch between plant, state and reference");
  }
  dm.seed = cfg.seed;
  const long steps = cfg.steps();

  SimLog log;
  const auto expected = static_cast<std::size_t>(steps / cfg.decimation + 1);
  for (auto* v : {&log.q, &log.qdot, &log.e, &log.edot, &log.s, &log.tau, &log.d}) v->reserve(expected);
  log.t.reserve(expected);
  log.V.reserve(expected);

  RealVec x(2 * n);
  x << x0.q, x0.qdot;
  ManipulatorState st{x0.q, x0.qdot};
  for (long k = 0; k <= steps; ++k) {
    const double t = double(k) * cfg.dt;
    st.q = x.head(n);
    st.qdot = x.tail(n);
    const ControlSample c = controller(t, st, ref(t));
    const RealVec d = disturbance_at_step(dm, std::uint64_t(k), n);
    if (!c.tau.allFinite()) {
      log.diverged_at = t;
      break;
    }
    if (k % cfg.decimation == 0) {
      log.t.push_back(t);
      log.q.push_back(st.q);
      log.qdot.push_back(st.qdot);
      log.e.push_back(c.e);
      log.edot.push_back(c.edot);
      log.s.push_back(c.s);
      log.tau.push_back(c.tau);
      log.d.push_back(d);
      log.V.push_back(c.V);
    }
    if (k == steps) break;
    auto rhs = [&](double, const RealVec& y) {
      const ManipulatorState ys{y.head(n), y.tail(n)};
      RealVec dy(2 * n);
      dy << ys.qdot, plant.acceleration(ys, c.tau, d);
      return dy;
    };
    x = rk4_step(rhs, t, x, cfg.dt);
    if (!x.allFinite()) {
      log.diverged_at = t + cfg.dt;
      break;
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// Analysis.

enum class SeriesKind { state, error, surface };

inline double series_inf_norm(const SimLog& log, std::size_t i, SeriesKind which) {
  switch (which) {
    case SeriesKind::state:
      return std::max(log.q[i].lpNorm<Eigen::Infinity>(), log.qdot[i].lpNorm<Eigen::Infinity>());
    case SeriesKind::error:
      return log.e[i].lpNorm<Eigen::Infinity>();
    case SeriesKind::surface:
      return log.s[i].lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

/// Earliest logged time after which the chosen series stays below `tol`
/// until the end of the log; nullopt if the last sample is not below it.
inline std::optional<double> settling_time(const SimLog& log, double tol, SeriesKind which) {
  if (!(tol > 0.0)) throw std::invalid_argument("settling_time: tol must be positive");
  std::optional<double> t_star;
  for (std::size_t i = log.size(); i-- > 0;) {
    if (series_inf_norm(log, i, which) >= tol) break;
    t_star = log.t[i];
  }
  return t_star;
}

/// Largest value of the chosen series over logged t in [t0, t1].
inline double peak_over(const SimLog& log, double t0, double t1, SeriesKind which) {
  double peak = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.t[i] >= t0 - 1e-12 && log.t[i] <= t1 + 1e-12) {
      peak = std::max(peak, series_inf_norm(log, i, which));
    }
  }
  return peak;
}

/// Trapezoidal integral of ||tau(t)||_2 from the first sample to t_end.
inline double energy(const SimLog& log, double t_end) {
  if (log.size() < 2) return 0.0;
  if (t_end > log.t.back() + 1e-9) throw std::invalid_argument("energy: t_end beyond the log");
  double acc = 0.0;
  for (std::size_t i = 1; i < log.size(); ++i) {
    const double a = log.t[i - 1];
    if (a >= t_end) break;
    const double fa = log.tau[i - 1].norm();
    const double fb = log.tau[i].norm();
    const double b = std::min(log.t[i], t_end);
    const double fb_cut = fa + (fb - fa) * (b - a) / (log.t[i] - a);
    acc += 0.5 * (fa + fb_cut) * (b - a);
  }
  return acc;
}

enum class LyapunovKind { half_sTs, half_sTM0s, ptsm_scalar };

struct LyapunovSettings {
  // Predefined-time decrement: Vdot <= -(pi/(rho Tc)) (V^{1-rho/2} + V^{1+rho/2}).
  double rho = 0.5;
  double Tc = 1.0;
  // Scalar PTSM decrement: Vdot = -1/Ts.
  double Ts = 1.0;
  double gamma = 0.5;
  double rel_tol = 0.02;        // tolerance as a fraction of the right-hand side
  double active_above = 1e-3;   // points with ||s||_inf (or |x|) at or below are skipped
  std::optional<ManipulatorModel> nominal;  // needed for half_sTM0s
  std::optional<double> t_max;              // ignore samples after this time
};

struct LyapunovTrace {
  std::vector<double> V;
  std::vector<double> Vdot;
  std::vector<double> rhs;
  std::vector<bool> checked;
  std::size_t n_checked = 0;
  std::size_t n_violations = 0;
  double worst_excess = 0.0;  // largest (Vdot - rhs) / |rhs| over checked points
  double violation_fraction() const {
    return n_checked ? double(n_violations) / double(n_checked) : 0.0;
  }
};

namespace detail {

inline std::vector<double> finite_difference(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> d(y.size(), 0.0);
  const std::size_t n = y.size();
  if (n < 2) return d;
  d[0] = (y[1] - y[0]) / (t[1] - t[0]);
  d[n - 1] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (t[i + 1] - t[i - 1]);
  return d;
}

}  // namespace detail

/// Rebuilds V along the log, differentiates it (central differences, one-sided
/// at the ends) and compares against the decrement the chosen kind promises.
/// For ptsm_scalar the logged q must hold the reduced-flow state; the check is
/// |Vdot + 1/Ts| <= rel_tol / Ts and V sums over components.
inline LyapunovTrace lyapunov_trace(const SimLog& log, LyapunovKind kind, const LyapunovSettings& cfg) {
  LyapunovTrace tr;
  const std::size_t n = log.size();
  tr.V.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case LyapunovKind::half_sTs:
        tr.V[i] = 0.5 * log.s[i].squaredNorm();
        break;
      case LyapunovKind::half_sTM0s: {
        if (!cfg.nominal) throw std::invalid_argument("lyapunov_trace: half_sTM0s needs the nominal model");
        const RealMat M0 = cfg.nominal->terms({log.q[i], log.qdot[i]}).M;
        tr.V[i] = 0.5 * log.s[i].dot(M0 * log.s[i]);
        break;
      }
      case LyapunovKind::ptsm_scalar: {
        double v = 0.0;
        for (double x : log.q[i]) v += ptsm_lyapunov(x, cfg.gamma);
        tr.V[i] = v;
        break;
      }
    }
  }
  tr.Vdot = detail::finite_difference(log.t, tr.V);
  tr.rhs.resize(n);
  tr.checked.assign(n, false);
  const double k = std::numbers::pi / (cfg.rho * cfg.Tc);
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.t_max && log.t[i] > *cfg.t_max) continue;
    double excess = 0.0;
    if (kind == LyapunovKind::ptsm_scalar) {
      tr.rhs[i] = -1.0 / cfg.Ts;
      // Both neighbours must be active too, or the difference straddles arrival.
      auto active = [&](std::size_t j) {
        return log.q[j].size() == 1 && std::abs(log.q[j][0]) > cfg.active_above;
      };
      if (!active(i) || (i > 0 && !active(i - 1)) || (i + 1 < n && !active(i + 1))) continue;
      excess = std::abs(tr.Vdot[i] - tr.rhs[i]) / std::abs(tr.rhs[i]) - cfg.rel_tol;
    } else {
      tr.rhs[i] = -k * (std::pow(tr.V[i], 1.0 - 0.5 * cfg.rho) + std::pow(tr.V[i], 1.0 + 0.5 * cfg.rho));
      auto active = [&](std::size_t j) { return log.s[j].lpNorm<Eigen::Infinity>() > cfg.active_above; };
      if (!active(i) || (i > 0 && !active(i - 1)) || (i + 1 < n && !active(i + 1))) continue;
      excess = (tr.Vdot[i] - tr.rhs[i]) / std::abs(tr.rhs[i]) - cfg.rel_tol;
    }
    tr.checked[i] = true;
    ++tr.n_checked;
    tr.worst_excess = std::max(tr.worst_excess, excess + cfg.rel_tol);
    if (excess > 0.0) ++tr.n_violations;
  }
  return tr;
}

/// Wraps a scalar reduced-flow trajectory as a log (q holds x) so that the
/// shared analysis routines apply.
inline SimLog log_from_trajectory(const Trajectory& tr) {
  SimLog log;
  log.t = tr.t;
  for (const auto& x : tr.x) {
    const RealVec z = RealVec::Zero(x.size());
    log.q.push_back(x);
    log.qdot.push_back(z);
    log.e.push_back(x);
    log.edot.push_back(z);
    log.s.push_back(z);
    log.tau.push_back(z);
    log.d.push_back(z);
    log.V.push_back(0.0);
  }
  return log;
}

}  // namespace ptsm
