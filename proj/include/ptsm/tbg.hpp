#pragma once

// Time base generator: a smooth profile rising from 0 at t = 0 to 1 at the
// predefined instant Tc with zero slope at both ends, and the time-varying
// gain built from it.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptsm {

struct TbgSample {
  double value = 0.0;  // epsilon(t)
  double rate = 0.0;   // d epsilon / dt
};

/// Quintic-sextic generator eps(tau) = c6 tau^6 + c5 tau^5 + c4 tau^4 with
/// tau = t / Tc. The default coefficients {10, -24, 15} give eps(1) = 1 and
/// eps'(0) = eps'(1) = 0. Other coefficients exist only for negative-control
/// fixtures.
class TbgPoly {
 public:
  explicit TbgPoly(double Tc, std::array<double, 3> coeffs = {10.0, -24.0, 15.0})
      : Tc_(Tc), c_(coeffs) {
    if (!(Tc > 0.0) || !std::isfinite(Tc)) throw std::invalid_argument("TbgPoly: Tc must be positive");
  }

  double Tc() const { return Tc_; }
  const std::array<double, 3>& coefficients() const { return c_; }

  TbgSample eval(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("TbgPoly::eval: t must be non-negative");
    if (t > Tc_) return {1.0, 0.0};
    const double tau = t / Tc_;
    const double t2 = tau * tau;
    const double t3 = t2 * tau;
    const double value = t3 * tau * (c_[2] + tau * (c_[1] + tau * c_[0]));
    const double rate = t3 * (4.0 * c_[2] + tau * (5.0 * c_[1] + tau * 6.0 * c_[0])) / Tc_;
    return {value, rate};
  }

  /// phi(t) = eps'(t) / (1 - eps(t) + epsilon); finite since the denominator
  /// stays at or above epsilon.
  double gain(double t, double epsilon) const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("TbgPoly::gain: epsilon must be positive");
    const auto [e, ed] = eval(t);
    return ed / (1.0 - e + epsilon);
  }

 private:
  double Tc_;
  std::array<double, 3> c_;
};

struct PropertyCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;  // worst observed deviation
  std::optional<double> at_time;
};

struct TbgReport {
  std::vector<PropertyCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// Checks endpoint values, monotonicity on [0, Tc] and continuity of the
/// rate across Tc on a uniform grid of `samples` intervals.
inline TbgReport tbg_validate(const TbgPoly& g, int samples) {
  if (samples < 100) throw std::invalid_argument("tbg_validate: need at least 100 samples");
  constexpr double tol = 1e-9;
  const double Tc = g.Tc();
  TbgReport rep;

  const auto s0 = g.eval(0.0);
  const auto s1 = g.eval(Tc);
  const double end_err = std::max({std::abs(s0.value), std::abs(s0.rate), std::abs(s1.value - 1.0),
                                   std::abs(s1.rate)});
  rep.checks.push_back({"endpoints", end_err < tol, end_err, std::nullopt});

  double worst_drop = 0.0;
  std::optional<double> where;
  double prev = s0.value;
  for (int k = 1; k <= samples; ++k) {
    const double t = Tc * k / samples;
    const double v = g.eval(t).value;
    if (prev - v > worst_drop) {
      worst_drop = prev - v;
      where = t;
    }
    prev = v;
  }
  rep.checks.push_back({"non_decreasing", worst_drop <= tol, worst_drop, where});

  const double h = Tc * 1e-12;
  const double jump = std::abs(g.eval(Tc - h).rate - g.eval(Tc + h).rate);
  const double vjump = std::abs(g.eval(Tc - h).value - g.eval(Tc + h).value);
  rep.checks.push_back({"rate_continuous_at_Tc", jump < tol && vjump < tol, std::max(jump, vjump), Tc});
  return rep;
}

}  // namespace ptsm
