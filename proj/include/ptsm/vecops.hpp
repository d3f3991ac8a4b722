#pragma once

// Elementwise vector operators shared by every surface and control law.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ptsm {

using RealVec = Eigen::VectorXd;
using RealMat = Eigen::MatrixXd;

/// Throws std::invalid_argument if any entry of `x` is NaN or infinite.
inline void require_finite(const RealVec& x, const char* what = "vector") {
  if (!x.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

inline void require_same_size(const RealVec& a, const RealVec& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

/// Scalar |x|^k with zero mapped directly to zero.
inline double abs_pow(double x, double k) {
  const double a = std::abs(x);
  return a > 0.0 ? std::exp(k * std::log(a)) : 0.0;
}

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// sig(x)^k = sgn(x)|x|^k, the sign-preserving power.
inline double sig_pow(double x, double k) { return sign(x) * abs_pow(x, k); }

inline RealVec sig_pow(const RealVec& x, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("sig_pow: exponent must be positive");
  require_finite(x, "sig_pow");
  return x.unaryExpr([k](double v) { return sig_pow(v, k); });
}

inline RealVec hadamard(const RealVec& x, const RealVec& y) {
  require_same_size(x, y, "hadamard");
  return x.cwiseProduct(y);
}

/// [[x]]^k, the plain elementwise power. Non-integer exponents need a
/// strictly positive base.
inline RealVec elem_pow(const RealVec& x, double k) {
  require_finite(x, "elem_pow");
  const bool integral = std::floor(k) == k;
  if (!integral && (x.array() <= 0.0).any()) {
    throw std::domain_error("elem_pow: non-integer exponent needs positive entries");
  }
  RealVec out = x.unaryExpr([k](double v) { return std::pow(v, k); });
  require_finite(out, "elem_pow result");
  return out;
}

enum class SgnMode { exact, boundary_layer };

struct SgnConfig {
  SgnMode mode = SgnMode::boundary_layer;
  double width = 1e-3;
};

inline double sgn_reg(double s, const SgnConfig& cfg) {
  if (cfg.mode == SgnMode::exact) return sign(s);
  const double r = s / cfg.width;
  return r > 1.0 ? 1.0 : (r < -1.0 ? -1.0 : r);
}

/// Entrywise sign (sgn(0) = 0) or its saturated boundary-layer variant.
inline RealVec sgn_reg(const RealVec& s, const SgnConfig& cfg) {
  if (cfg.mode == SgnMode::boundary_layer && !(cfg.width > 0.0)) {
    throw std::invalid_argument("sgn_reg: boundary layer width must be positive");
  }
  require_finite(s, "sgn_reg");
  return s.unaryExpr([&cfg](double v) { return sgn_reg(v, cfg); });
}

inline const char* to_string(SgnMode m) {
  return m == SgnMode::exact ? "exact" : "layer";
}

}  // namespace ptsm
