#pragma once

// Sliding surfaces: the classical finite-time and fixed-time terminal
// surfaces plus the predefined-time (PTSM) surface, their reduced dynamics
// on s = 0 and the associated settling-time bounds.

#include "ptsm/rk4.hpp"
#include "ptsm/vecops.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptsm {

enum class SurfaceKind { finite_basic, finite_fast, fixed_time, ptsm };

inline const char* to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::finite_basic: return "finite_basic";
    case SurfaceKind::finite_fast: return "finite_fast";
    case SurfaceKind::fixed_time: return "fixed_time";
    case SurfaceKind::ptsm: return "ptsm";
  }
  return "?";
}

inline bool is_positive_odd(int v) { return v > 0 && v % 2 == 1; }

/// Parameters of one sliding-surface family. Only the fields of `kind` are
/// read; the named constructors validate them.
struct SurfaceConfig {
  SurfaceKind kind = SurfaceKind::ptsm;
  double b1 = 1.0;
  double a1 = 1.0;
  double nu = 0.5;
  double a2 = 1.0;
  double b2 = 1.0;
  int m1 = 5, n1 = 3, m2 = 3, n2 = 5;
  double Ts = 1.0;
  double gamma = 0.5;

  static SurfaceConfig finite_basic(double b1, double nu) {
    SurfaceConfig c;
    c.kind = SurfaceKind::finite_basic;
    c.b1 = b1;
    c.nu = nu;
    c.validate();
    return c;
  }
  static SurfaceConfig finite_fast(double a1, double b1, double nu) {
    SurfaceConfig c;
    c.kind = SurfaceKind::finite_fast;
    c.a1 = a1;
    c.b1 = b1;
    c.nu = nu;
    c.validate();
    return c;
  }
  static SurfaceConfig fixed_time(double a2, double b2, int m1, int n1, int m2, int n2) {
    SurfaceConfig c;
    c.kind = SurfaceKind::fixed_time;
    c.a2 = a2;
    c.b2 = b2;
    c.m1 = m1;
    c.n1 = n1;
    c.m2 = m2;
    c.n2 = n2;
    c.validate();
    return c;
  }
  static SurfaceConfig ptsm(double Ts, double gamma) {
    SurfaceConfig c;
    c.kind = SurfaceKind::ptsm;
    c.Ts = Ts;
    c.gamma = gamma;
    c.validate();
    return c;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("SurfaceConfig: " + m); };
    switch (kind) {
      case SurfaceKind::finite_fast:
        if (!(a1 > 0.0)) fail("a1 must be positive");
        [[fallthrough]];
      case SurfaceKind::finite_basic:
        if (!(b1 > 0.0)) fail("b1 must be positive");
        if (!(nu > 0.0 && nu < 1.0)) fail("nu must lie in (0,1)");
        break;
      case SurfaceKind::fixed_time:
        if (!(a2 > 0.0 && b2 > 0.0)) fail("a2, b2 must be positive");
        if (!(is_positive_odd(m1) && is_positive_odd(n1) && is_positive_odd(m2) &&
              is_positive_odd(n2)))
          fail("m1, n1, m2, n2 must be positive odd integers");
        if (!(m1 > n1 && m2 < n2)) fail("need m1 > n1 and m2 < n2");
        break;
      case SurfaceKind::ptsm:
        if (!(Ts > 0.0)) fail("Ts must be positive");
        if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0,1)");
        break;
    }
  }
};

/// |x| / sqrt(1 + x^2), computed without overflow for large |x|.
inline double bounded_ratio(double x) {
  const double a = std::abs(x);
  return a / std::hypot(1.0, a);
}

/// PTSM nonlinear term (1+x^2)^{3/2} / (Ts(1-gamma)) * sig(x/sqrt(1+x^2))^gamma.
inline double ptsm_term(double x, double Ts, double gamma) {
  const double r = std::hypot(1.0, x);
  return r * r * r / (Ts * (1.0 - gamma)) * sign(x) * abs_pow(bounded_ratio(x), gamma);
}

/// d/dx of ptsm_term. The second summand carries |x/sqrt(1+x^2)|^(gamma-1),
/// which diverges at x = 0; its base is clamped below at `ratio_floor`.
inline double ptsm_term_slope(double x, double Ts, double gamma, double ratio_floor = 1e-6) {
  const double r = std::hypot(1.0, x);
  const double k = 1.0 / (Ts * (1.0 - gamma));
  const double ratio = bounded_ratio(x);
  const double first = 3.0 * x * r * k * sign(x) * abs_pow(ratio, gamma);
  const double second = gamma * k * std::pow(std::max(ratio, ratio_floor), gamma - 1.0);
  return first + second;
}

/// Drift of one component for the configured family.
inline double surface_drift(const SurfaceConfig& cfg, double v) {
  switch (cfg.kind) {
    case SurfaceKind::finite_basic:
      return cfg.b1 * sig_pow(v, cfg.nu);
    case SurfaceKind::finite_fast:
      return cfg.a1 * v + cfg.b1 * sig_pow(v, cfg.nu);
    case SurfaceKind::fixed_time:
      return cfg.a2 * sig_pow(v, double(cfg.m1) / cfg.n1) + cfg.b2 * sig_pow(v, double(cfg.m2) / cfg.n2);
    case SurfaceKind::ptsm:
      return ptsm_term(v, cfg.Ts, cfg.gamma);
  }
  return 0.0;
}

inline RealVec surface_drift(const SurfaceConfig& cfg, const RealVec& x) {
  RealVec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = surface_drift(cfg, x[i]);
  return out;
}

/// s = xdot + drift(x) for the configured family, componentwise.
inline RealVec surface_value(const SurfaceConfig& cfg, const RealVec& x, const RealVec& xdot) {
  require_same_size(x, xdot, "surface_value");
  require_finite(x, "surface_value x");
  require_finite(xdot, "surface_value xdot");
  return xdot + surface_drift(cfg, x);
}

/// Reduced dynamics on s = 0: the xdot that zeroes surface_value.
inline RealVec on_surface_rhs(const SurfaceConfig& cfg, const RealVec& x) {
  require_finite(x, "on_surface_rhs");
  return -surface_drift(cfg, x);
}

/// Lyapunov function (|x|/sqrt(1+x^2))^{1-gamma} of the PTSM reduced flow.
/// Templated so the strict bound V < 1 can be observed at magnitudes where
/// double rounds it to one.
template <std::floating_point Real>
Real ptsm_lyapunov(Real x, Real gamma) {
  if (!(gamma > Real(0) && gamma < Real(1))) {
    throw std::invalid_argument("ptsm_lyapunov: gamma must lie in (0,1)");
  }
  const Real a = std::abs(x);
  if (a == Real(0)) return Real(0);
  const Real r = std::hypot(Real(1), a);
  // 1 - a/r written without cancellation.
  const Real gap = Real(1) / (r * (r + a));
  return std::exp((Real(1) - gamma) * std::log1p(-gap));
}

/// 1 - ptsm_lyapunov(x, gamma), accurate when V is close to one.
inline double ptsm_lyapunov_deficit(double x, double gamma) {
  const double a = std::abs(x);
  if (a == 0.0) return 1.0;
  const double r = std::hypot(1.0, a);
  const double gap = 1.0 / (r * (r + a));
  return -std::expm1((1.0 - gamma) * std::log1p(-gap));
}

/// Upper bound on the time to reach the origin once on s = 0.
inline double settling_bound(const SurfaceConfig& cfg, const RealVec& x0) {
  cfg.validate();
  const double worst = x0.size() ? x0.cwiseAbs().maxCoeff() : 0.0;
  switch (cfg.kind) {
    case SurfaceKind::finite_basic:
      return abs_pow(worst, 1.0 - cfg.nu) / (cfg.b1 * (1.0 - cfg.nu));
    case SurfaceKind::finite_fast:
      return std::log((cfg.a1 * abs_pow(worst, 1.0 - cfg.nu) + cfg.b1) / cfg.b1) /
             (cfg.a1 * (1.0 - cfg.nu));
    case SurfaceKind::fixed_time:
      return double(cfg.n1) / (cfg.a2 * (cfg.m1 - cfg.n1)) +
             double(cfg.n2) / (cfg.b2 * (cfg.n2 - cfg.m2));
    case SurfaceKind::ptsm:
      return ptsm_lyapunov(worst, cfg.gamma) * cfg.Ts;
  }
  return 0.0;
}

struct Trajectory {
  std::vector<double> t;
  std::vector<RealVec> x;
};

/// Integrates the reduced flow xdot = on_surface_rhs(x) and samples it on a
/// uniform grid of spacing `dt`.
///
/// Between grid points RK4 substeps are sized so that no component moves by
/// more than `rel_step` of its own magnitude; the flow is stiff for large |x|
/// and non-Lipschitz at zero, so a single fixed step cannot cover both ends.
/// Components with |x| < snap are set to exactly zero.
inline Trajectory integrate_on_surface(const SurfaceConfig& cfg, const RealVec& x0,
                                       double horizon, double dt = 1e-4,
                                       double rel_step = 1e-2, double snap = 1e-9) {
  cfg.validate();
  require_finite(x0, "integrate_on_surface");
  if (!(dt > 0.0 && horizon > 0.0)) throw std::invalid_argument("integrate_on_surface: bad grid");
  auto rhs = [&cfg](double, double v) {
    if (!std::isfinite(v)) throw std::domain_error("integrate_on_surface: non-finite state");
    return -surface_drift(cfg, v);
  };

  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  Trajectory out;
  out.t.resize(steps + 1);
  out.x.assign(steps + 1, RealVec(x0.size()));
  // The flow is decoupled, so each component is integrated on its own.
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    double x = std::abs(x0[i]) < snap ? 0.0 : x0[i];
    out.x[0][i] = x;
    for (long k = 0; k < steps; ++k) {
      double t = k * dt;
      const double t1 = (k + 1) * dt;
      while (t < t1 && x != 0.0) {
        const double f = rhs(t, x);
        double h = t1 - t;
        if (f != 0.0) h = std::min(h, rel_step * std::abs(x / f));
        x = rk4_step(rhs, t, x, h);
        if (std::abs(x) < snap) x = 0.0;
        t = (t1 - t - h <= 1e-15 * t1) ? t1 : t + h;
      }
      out.x[k + 1][i] = x;
    }
  }
  for (long k = 0; k <= steps; ++k) out.t[k] = k * dt;
  return out;
}

}  // namespace ptsm
