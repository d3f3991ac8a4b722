#pragma once

// Simulated systems: the uncertain double-integrator chain, Euler-Lagrange
// manipulators (with a two-link preset), bounded disturbances and the
// reference trajectory.

#include "ptsm/vecops.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ptsm {

// ---------------------------------------------------------------------------
// Double integrator chain: xi' = eta, eta' = tau + f.

struct SecondOrderState {
  RealVec xi;
  RealVec eta;
};

struct SecondOrderRates {
  RealVec xi_dot;
  RealVec eta_dot;
};

inline SecondOrderRates second_order_rhs(const SecondOrderState& s, const RealVec& tau,
                                         const RealVec& f) {
  require_same_size(s.xi, s.eta, "second_order_rhs state");
  require_same_size(s.eta, tau, "second_order_rhs tau");
  require_same_size(s.eta, f, "second_order_rhs f");
  return {s.eta, tau + f};
}

// ---------------------------------------------------------------------------
// Euler-Lagrange manipulators: M(q) qdd + C(q, qd) qd + g(q) = tau + d.

struct ManipulatorState {
  RealVec q;
  RealVec qdot;
};

struct Dynamics {
  RealMat M;
  RealMat C;
  RealVec g;
};

/// Physical parameters of a planar two-link arm with uniform rod links
/// (I_i = m_i l_i^2 / 3) and the lumped constants p1..p5 built from them.
struct ManipulatorParams {
  RealVec m;  // kg
  RealVec l;  // m
  RealVec r;  // m, centre-of-mass distance
  double g_const = 9.8;

  double I1() const { return m[0] * l[0] * l[0] / 3.0; }
  double I2() const { return m[1] * l[1] * l[1] / 3.0; }
  double p1() const { return m[0] * r[0] * r[0] + m[1] * (l[0] * l[0] + r[1] * r[1]) + I1() + I2(); }
  double p2() const { return m[1] * l[0] * r[1]; }
  double p3() const { return m[1] * r[1] * r[1] + I2(); }
  double p4() const { return m[0] * r[0] + m[1] * l[0]; }
  double p5() const { return m[1] * r[1]; }

  void validate() const {
    if (m.size() != 2 || l.size() != 2 || r.size() != 2) {
      throw std::invalid_argument("ManipulatorParams: two-link preset needs 2 masses/lengths");
    }
    if ((m.array() <= 0.0).any() || (l.array() <= 0.0).any() || (r.array() <= 0.0).any()) {
      throw std::invalid_argument("ManipulatorParams: masses and lengths must be positive");
    }
  }

  static ManipulatorParams with_half_lengths(RealVec m, RealVec l) {
    ManipulatorParams p{m, l, 0.5 * l};
    p.validate();
    return p;
  }
};

inline ManipulatorParams two_link_true() {
  return ManipulatorParams::with_half_lengths(RealVec{{2.8, 1.8}}, RealVec{{3.8, 2.8}});
}

inline ManipulatorParams two_link_nominal() {
  return ManipulatorParams::with_half_lengths(RealVec{{2.75, 1.85}}, RealVec{{3.86, 2.74}});
}

inline void require_two_dof(const ManipulatorState& s) {
  if (s.q.size() != 2 || s.qdot.size() != 2) {
    throw std::invalid_argument("two-link model: state must have 2 DOF");
  }
}

/// Inertia, Coriolis-centrifugal and gravity terms of the two-link arm.
inline Dynamics manip_matrices(const ManipulatorParams& p, const ManipulatorState& s) {
  require_two_dof(s);
  const double c2 = std::cos(s.q[1]);
  const double s2 = std::sin(s.q[1]);
  const double p2 = p.p2();
  const double p3 = p.p3();
  Dynamics d{RealMat(2, 2), RealMat(2, 2), RealVec(2)};
  d.M << p.p1() + 2.0 * p2 * c2, p3 + p2 * c2,
         p3 + p2 * c2,           p3;
  d.C << -p2 * s2 * s.qdot[1], -p2 * s2 * (s.qdot[0] + s.qdot[1]),
          p2 * s2 * s.qdot[0], 0.0;
  const double c1 = std::cos(s.q[0]);
  const double c12 = std::cos(s.q[0] + s.q[1]);
  d.g << p.g_const * (p.p4() * c1 + p.p5() * c12), p.g_const * p.p5() * c12;
  return d;
}

/// Analytic dM/dt = (dM/dq2) qd2 for the two-link arm.
inline RealMat manip_mass_rate(const ManipulatorParams& p, const ManipulatorState& s) {
  require_two_dof(s);
  const double k = -p.p2() * std::sin(s.q[1]) * s.qdot[1];
  RealMat Md(2, 2);
  Md << 2.0 * k, k,
        k,       0.0;
  return Md;
}

/// Any n-DOF Euler-Lagrange model expressed through its (M, C, g) terms.
class ManipulatorModel {
 public:
  using Terms = std::function<Dynamics(const ManipulatorState&)>;

  ManipulatorModel(int dof, Terms terms) : dof_(dof), terms_(std::move(terms)) {}

  static ManipulatorModel two_link(const ManipulatorParams& p) {
    p.validate();
    return ManipulatorModel(2, [p](const ManipulatorState& s) { return manip_matrices(p, s); });
  }

  int dof() const { return dof_; }
  Dynamics terms(const ManipulatorState& s) const { return terms_(s); }

 private:
  int dof_;
  Terms terms_;
};

/// qdd = M^{-1} (tau + d - C qd - g), evaluated with the model's own terms.
inline RealVec manip_rhs(const ManipulatorModel& model, const ManipulatorState& s,
                         const RealVec& tau, const RealVec& d) {
  const Dynamics dyn = model.terms(s);
  const RealVec rhs = tau + d - dyn.C * s.qdot - dyn.g;
  Eigen::LLT<RealMat> llt(dyn.M);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("manip_rhs: inertia matrix is not positive definite");
  }
  return llt.solve(rhs);
}

inline RealVec manip_rhs(const ManipulatorParams& p, const ManipulatorState& s, const RealVec& tau,
                         const RealVec& d) {
  return manip_rhs(ManipulatorModel::two_link(p), s, tau, d);
}

// ---------------------------------------------------------------------------
// Reference trajectories.

struct ReferenceSample {
  RealVec q;      // rad
  RealVec omega;  // rad/s
  RealVec alpha;  // rad/s^2
};

class ReferenceTrajectory {
 public:
  using Fn = std::function<ReferenceSample(double)>;

  ReferenceTrajectory(int dim, Fn fn, double accel_bound)
      : dim_(dim), fn_(std::move(fn)), accel_bound_(accel_bound) {}

  /// Regulation to the origin.
  static ReferenceTrajectory zero(int dim) {
    return ReferenceTrajectory(
        dim, [dim](double) {
          return ReferenceSample{RealVec::Zero(dim), RealVec::Zero(dim), RealVec::Zero(dim)};
        },
        0.0);
  }

  /// q_r = [7 + 5 sin t, -7 - 5 cos t].
  static ReferenceTrajectory two_link_circle() {
    return ReferenceTrajectory(
        2, [](double t) {
          const double s = std::sin(t), c = std::cos(t);
          return ReferenceSample{RealVec{{7.0 + 5.0 * s, -7.0 - 5.0 * c}},
                                 RealVec{{5.0 * c, 5.0 * s}}, RealVec{{-5.0 * s, 5.0 * c}}};
        },
        5.0);
  }

  int dim() const { return dim_; }
  double accel_bound() const { return accel_bound_; }
  ReferenceSample operator()(double t) const { return fn_(t); }

 private:
  int dim_;
  Fn fn_;
  double accel_bound_;
};

inline ReferenceSample reference_eval(double t) { return ReferenceTrajectory::two_link_circle()(t); }

// ---------------------------------------------------------------------------
// Disturbances.

enum class DisturbanceKind { zero, piecewise_constant_uniform };

inline const char* to_string(DisturbanceKind k) {
  return k == DisturbanceKind::zero ? "zero" : "uniform";
}

struct DisturbanceModel {
  DisturbanceKind kind = DisturbanceKind::zero;
  double bound = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
inline double unit_interval(std::uint64_t w) { return double(w >> 11) * 0x1.0p-53; }

/// SplitMix64 finaliser; used as a counter-based generator so every
/// (seed, step, component) key maps to an independent word without state.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t keyed_word(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

}  // namespace detail

/// Disturbance held over integration step `step`, each component uniform in
/// [-bound, bound]. Identical (seed, step) always produce the same vector.
inline RealVec disturbance_at_step(const DisturbanceModel& dm, std::uint64_t step, int dim) {
  if (dm.kind == DisturbanceKind::zero || dm.bound == 0.0) return RealVec::Zero(dim);
  RealVec out(dim);
  for (int i = 0; i < dim; ++i) {
    const auto w = detail::keyed_word(dm.seed, 0xD157ull + std::uint64_t(i), step);
    out[i] = dm.bound * (2.0 * detail::unit_interval(w) - 1.0);
  }
  return out;
}

/// Sample at time t for an integration grid of spacing dt.
inline RealVec disturbance_sample(const DisturbanceModel& dm, double t, double dt, int dim) {
  if (!(dt > 0.0)) throw std::invalid_argument("disturbance_sample: dt must be positive");
  const auto step = static_cast<std::uint64_t>(std::floor(t / dt + 1e-9));
  return disturbance_at_step(dm, step, dim);
}

// ---------------------------------------------------------------------------
// Preset registry.

struct PlantPreset {
  std::string description;
  std::function<ManipulatorParams()> params;  // empty for the double integrator
  int dof = 2;
};

inline const std::map<std::string, PlantPreset>& plant_presets() {
  static const std::map<std::string, PlantPreset> presets{
      {"example1", {"double integrator chain, R^2, |f| <= 5", {}, 2}},
      {"manip2dof-true", {"two-link arm, true parameters", &two_link_true, 2}},
      {"manip2dof-nominal", {"two-link arm, nominal parameters", &two_link_nominal, 2}},
  };
  return presets;
}

inline ManipulatorParams manipulator_preset(const std::string& name) {
  const auto& reg = plant_presets();
  auto it = reg.find(name);
  if (it == reg.end() || !it->second.params) {
    throw std::invalid_argument("unknown manipulator preset '" + name + "'");
  }
  return it->second.params();
}

}  // namespace ptsm
