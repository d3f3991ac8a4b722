#pragma once

// Control laws built on the PTSM surface: the double-integrator controller,
// the manipulator equivalent control with three hitting laws (predefined-time,
// time-base-generator, fixed-time), and the sufficient gain conditions.

#include "ptsm/plants.hpp"
#include "ptsm/surfaces.hpp"
#include "ptsm/tbg.hpp"
#include "ptsm/vecops.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace ptsm {

/// Singularity guards for the two places where the laws divide by a
/// vanishing quantity.
struct Guards {
  double s_norm_floor = 1e-9;  // below this the s/||s||^rho term is zero
  double ratio_floor = 1e-6;   // lower clamp on |e|/sqrt(1+e^2) under a negative power
};

struct SecondOrderGains {
  double Ts = 4.0;
  double Tc = 6.0;
  double gamma = 0.5;
  double rho = 0.4;
  RealVec Kf;  // diagonal of K_f

  void validate() const {
    if (!(Ts > 0.0 && Tc > 0.0)) throw std::invalid_argument("SecondOrderGains: Ts, Tc must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("SecondOrderGains: gamma must lie in (0,1)");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("SecondOrderGains: rho must lie in (0,1)");
    if (Kf.size() == 0 || (Kf.array() <= 0.0).any())
      throw std::invalid_argument("SecondOrderGains: K_f diagonal must be positive");
  }
};

enum class ManipLaw { ptsm, tbg, fixed };

inline const char* to_string(ManipLaw k) {
  switch (k) {
    case ManipLaw::ptsm: return "ptsm";
    case ManipLaw::tbg: return "tbg";
    case ManipLaw::fixed: return "fixed";
  }
  return "?";
}

struct ManipGains {
  double Ts = 4.0;
  double Tc = 6.0;
  double gamma = 0.5;
  double rho = 0.5;
  RealVec Kd;  // diagonal of K_d
  double sigma1 = 14.0;
  double sigma2 = 12.0;
  double sigma3 = 10.0;
  double sigma_m0_hat = 2.5;  // half the bound on ||M0||
  double epsilon = 0.1;       // TBG law only
  double alpha = 1.0;         // fixed-time law only
  double beta = 1.0;
  int m1 = 5, n1 = 3, m2 = 3, n2 = 5;

  void validate(ManipLaw law) const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("ManipGains: " + m); };
    if (!(Ts > 0.0 && Tc > 0.0)) fail("Ts, Tc must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0,1)");
    if (!(rho > 0.0 && rho < 1.0)) fail("rho must lie in (0,1)");
    if (Kd.size() == 0 || (Kd.array() <= 0.0).any()) fail("K_d diagonal must be positive");
    if (sigma1 < 0.0 || sigma2 < 0.0 || sigma3 < 0.0) fail("sigma bounds must be non-negative");
    if (!(sigma_m0_hat > 0.0)) fail("sigma_m0_hat must be positive");
    if (law == ManipLaw::tbg && !(epsilon > 0.0)) fail("epsilon must be positive");
    if (law == ManipLaw::fixed) {
      if (!(alpha > 0.0 && beta > 0.0)) fail("alpha, beta must be positive");
      if (!(is_positive_odd(m1) && is_positive_odd(n1) && is_positive_odd(m2) && is_positive_odd(n2)))
        fail("m1, n1, m2, n2 must be positive odd integers");
      if (!(m1 > n1 && m2 < n2)) fail("need m1 > n1 and m2 < n2");
    }
  }
};

// ---------------------------------------------------------------------------
// Building blocks.

/// PTSM surface s = edot + drift(e), componentwise.
inline RealVec ptsm_surface(const RealVec& e, const RealVec& edot, double Ts, double gamma) {
  return surface_value(SurfaceConfig::ptsm(Ts, gamma), e, edot);
}

/// Time derivative of the surface drift along edot: drift'(e) o edot.
inline RealVec ptsm_drift_rate(const RealVec& e, const RealVec& edot, double Ts, double gamma,
                               const Guards& guards = {}) {
  require_same_size(e, edot, "ptsm_drift_rate");
  RealVec out(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    out[i] = ptsm_term_slope(e[i], Ts, gamma, guards.ratio_floor) * edot[i];
  }
  return out;
}

/// -(pi/(rho Tc)) (c_low + c_high ||s||^{2 rho}) s / ||s||^rho.
inline RealVec predefined_hitting(const RealVec& s, double rho, double Tc, double c_low,
                                  double c_high, const Guards& guards = {}) {
  const double n = s.norm();
  if (n < guards.s_norm_floor) return RealVec::Zero(s.size());
  const double k = std::numbers::pi / (rho * Tc);
  return -k * (c_low + c_high * std::pow(n, 2.0 * rho)) * std::pow(n, -rho) * s;
}

inline double robust_gain(const ManipGains& g, const RealVec& q, const RealVec& qdot) {
  return g.sigma1 + g.sigma2 * q.norm() + g.sigma3 * qdot.squaredNorm();
}

/// -[(sigma1 + sigma2 ||q|| + sigma3 ||qd||^2) I + K_d] sgn(s) - C0 s.
inline RealVec robust_terms(const ManipGains& g, const RealVec& s, const RealVec& q,
                            const RealVec& qdot, const RealMat& C0, const SgnConfig& sgn) {
  require_same_size(s, g.Kd, "robust_terms K_d");
  const RealVec k = g.Kd.array() + robust_gain(g, q, qdot);
  return -k.cwiseProduct(sgn_reg(s, sgn)) - C0 * s;
}

// ---------------------------------------------------------------------------
// Double integrator.

struct SecondOrderControl {
  RealVec tau;
  RealVec s;
};

/// tau = tau_eq + tau_s for xi' = eta, eta' = tau + f.
inline SecondOrderControl so_tau(const SecondOrderGains& g, const RealVec& xi, const RealVec& eta,
                                 const SgnConfig& sgn = {}, const Guards& guards = {}) {
  require_same_size(xi, eta, "so_tau");
  require_same_size(xi, g.Kf, "so_tau K_f");
  const RealVec s = ptsm_surface(xi, eta, g.Ts, g.gamma);
  const RealVec tau_eq = -ptsm_drift_rate(xi, eta, g.Ts, g.gamma, guards);
  const RealVec tau_s =
      predefined_hitting(s, g.rho, g.Tc, 1.0, 1.0, guards) - g.Kf.cwiseProduct(sgn_reg(s, sgn));
  return {tau_eq + tau_s, s};
}

// ---------------------------------------------------------------------------
// Manipulator.

/// Equivalent control: cancels the surface drift through the nominal inertia
/// and feeds forward the nominal Coriolis and gravity terms.
inline RealVec manip_tau_eq(const ManipGains& g, const RealVec& e, const RealVec& edot,
                            const RealMat& M0, const RealMat& C0, const RealVec& g0,
                            const RealVec& qdot, const Guards& guards = {}) {
  return -M0 * ptsm_drift_rate(e, edot, g.Ts, g.gamma, guards) + C0 * qdot + g0;
}

inline RealVec manip_tau_s_ptsm(const ManipGains& g, const RealVec& s, const RealVec& q,
                                const RealVec& qdot, const RealMat& C0, const SgnConfig& sgn = {},
                                const Guards& guards = {}) {
  const double lo = std::pow(g.sigma_m0_hat, 1.0 - 0.5 * g.rho);
  const double hi = std::pow(g.sigma_m0_hat, 1.0 + 0.5 * g.rho);
  return predefined_hitting(s, g.rho, g.Tc, lo, hi, guards) + robust_terms(g, s, q, qdot, C0, sgn);
}

inline RealVec manip_tau_s_tbg(const ManipGains& g, const TbgPoly& tbg, double t, const RealVec& s,
                               const RealVec& q, const RealVec& qdot, const RealMat& C0,
                               const SgnConfig& sgn = {}) {
  return robust_terms(g, s, q, qdot, C0, sgn) - g.sigma_m0_hat * tbg.gain(t, g.epsilon) * s;
}

inline RealVec manip_tau_s_fixed(const ManipGains& g, const RealVec& s, const RealVec& q,
                                 const RealVec& qdot, const RealMat& C0, const SgnConfig& sgn = {}) {
  g.validate(ManipLaw::fixed);
  const double c1 = g.alpha * std::pow(g.sigma_m0_hat, double(g.m1 + g.n1) / (2.0 * g.n1));
  const double c2 = g.beta * std::pow(g.sigma_m0_hat, double(g.m2 + g.n2) / (2.0 * g.n2));
  return robust_terms(g, s, q, qdot, C0, sgn) - c1 * sig_pow(s, double(g.m1) / g.n1) -
         c2 * sig_pow(s, double(g.m2) / g.n2);
}

/// Settling bound of the fixed-time law: reaching time plus Ts.
inline double fixed_time_settling_bound(const ManipGains& g) {
  return g.Ts + 2.0 * g.n1 / (g.alpha * (g.m1 - g.n1)) +
         double(g.n2 + g.m2) / (g.beta * (g.n2 - g.m2));
}

/// Radius of the set that ||s(Tc)|| enters under the TBG law.
inline double tbg_surface_radius(double epsilon, double V0, double lambda_min_M0) {
  return std::sqrt(2.0 * epsilon * V0 / (lambda_min_M0 * (1.0 + epsilon)));
}

// ---------------------------------------------------------------------------
// Sufficient gain conditions.

enum class GainCondition { second_order, manipulator, tbg, fixed_time };

inline const char* to_string(GainCondition c) {
  switch (c) {
    case GainCondition::second_order: return "second_order";
    case GainCondition::manipulator: return "manipulator";
    case GainCondition::tbg: return "tbg";
    case GainCondition::fixed_time: return "fixed_time";
  }
  return "?";
}

struct UncertaintyBounds {
  double sigma_f = 0.0;      // double integrator
  double sigma_d = 0.0;      // manipulator disturbance
  double sigma_m0 = 0.0;     // bound on ||M0||
  double sigma_alpha = 0.0;  // bound on ||alpha_r||
};

struct GainVerdict {
  GainCondition condition = GainCondition::second_order;
  bool pass = false;
  double lambda_min = 0.0;
  double threshold = 0.0;
  double margin = 0.0;  // lambda_min - threshold
  std::string detail;
};

inline GainVerdict check_gains(GainCondition cond, const SecondOrderGains& g,
                               const UncertaintyBounds& b) {
  if (cond != GainCondition::second_order) {
    throw std::invalid_argument("check_gains: double-integrator gains only support second_order");
  }
  GainVerdict v{cond};
  v.lambda_min = g.Kf.size() ? g.Kf.minCoeff() : 0.0;
  v.threshold = b.sigma_f;
  v.margin = v.lambda_min - v.threshold;
  const bool times_ok = g.Ts > 0.0 && g.Tc > 0.0;
  v.pass = times_ok && v.margin >= 0.0;
  v.detail = times_ok ? "lambda_min(K_f) >= sigma_f" : "Ts and Tc must be positive";
  return v;
}

inline GainVerdict check_gains(GainCondition cond, const ManipGains& g, const UncertaintyBounds& b) {
  if (cond == GainCondition::second_order) {
    throw std::invalid_argument("check_gains: second_order applies to double-integrator gains");
  }
  GainVerdict v{cond};
  v.lambda_min = g.Kd.size() ? g.Kd.minCoeff() : 0.0;
  v.threshold = b.sigma_d + b.sigma_m0 * b.sigma_alpha;
  v.margin = v.lambda_min - v.threshold;
  const ManipLaw law = cond == GainCondition::tbg   ? ManipLaw::tbg
                       : cond == GainCondition::fixed_time ? ManipLaw::fixed
                                                           : ManipLaw::ptsm;
  bool structural = true;
  try {
    g.validate(law);
  } catch (const std::invalid_argument& e) {
    structural = false;
    v.detail = e.what();
  }
  v.pass = structural && v.margin >= 0.0;
  if (structural) v.detail = "lambda_min(K_d) >= sigma_d + sigma_m0 * sigma_alpha";
  return v;
}

}  // namespace ptsm
