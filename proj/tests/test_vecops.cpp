#include "ptsm/vecops.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace ptsm;

namespace {
void expect_vec(const RealVec& got, std::initializer_list<double> want, double tol = 1e-15) {
  ASSERT_EQ(got.size(), Eigen::Index(want.size()));
  Eigen::Index i = 0;
  for (double w : want) EXPECT_NEAR(got[i++], w, tol);
}
}  // namespace

TEST(SigPow, Examples) {
  expect_vec(sig_pow(RealVec{{-4.0, 9.0}}, 0.5), {-2.0, 3.0});
  expect_vec(sig_pow(RealVec{{0.0, 0.0}}, 0.3), {0.0, 0.0});
  expect_vec(sig_pow(RealVec{{2.0, -3.0}}, 1.0), {2.0, -3.0});
}

TEST(SigPow, RejectsBadInput) {
  EXPECT_THROW(sig_pow(RealVec{{1.0}}, 0.0), std::invalid_argument);
  EXPECT_THROW(sig_pow(RealVec{{1.0}}, -1.0), std::invalid_argument);
  EXPECT_ANY_THROW(sig_pow(RealVec{{std::nan("")}}, 0.5));
  EXPECT_ANY_THROW(sig_pow(RealVec{{std::numeric_limits<double>::infinity()}}, 0.5));
}

TEST(SigPow, Odd) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(-1e3, 1e3), k(0.01, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const RealVec v{{x(rng), x(rng)}};
    const double e = k(rng);
    EXPECT_EQ(sig_pow(RealVec(-v), e), RealVec(-sig_pow(v, e)));
  }
}

TEST(SigPow, OddRatioMatchesSignedElemPow) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> x(-50, 50);
  for (auto [m, n] : {std::pair{5, 3}, std::pair{3, 5}, std::pair{7, 9}, std::pair{1, 3}}) {
    const double k = double(m) / n;
    for (int i = 0; i < 200; ++i) {
      const RealVec v{{x(rng), x(rng)}};
      const RealVec via_abs = elem_pow(v.cwiseAbs(), k).cwiseProduct(v.unaryExpr([](double a) { return sign(a); }));
      const RealVec got = sig_pow(v, k);
      for (int j = 0; j < 2; ++j) EXPECT_NEAR(got[j], via_abs[j], 1e-12 * std::max(1.0, std::abs(got[j])));
    }
  }
}

TEST(Hadamard, Examples) {
  expect_vec(hadamard(RealVec{{1.0, 2.0}}, RealVec{{3.0, 4.0}}), {3.0, 8.0});
  const RealVec x{{1.5, -2.0, 7.0}};
  EXPECT_EQ(hadamard(x, RealVec::Ones(3)), x);
  expect_vec(hadamard(RealVec{{0.0, 5.0}}, RealVec{{7.0, 0.0}}), {0.0, 0.0});
}

TEST(Hadamard, LengthMismatch) {
  EXPECT_THROW(hadamard(RealVec{{1.0}}, RealVec{{1.0, 2.0}}), std::invalid_argument);
}

TEST(Hadamard, CommutativeAssociative) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 500; ++i) {
    RealVec a(3), b(3), c(3);
    for (int j = 0; j < 3; ++j) a[j] = u(rng), b[j] = u(rng), c[j] = u(rng);
    EXPECT_EQ(hadamard(a, b), hadamard(b, a));
    const RealVec l = hadamard(hadamard(a, b), c), r = hadamard(a, hadamard(b, c));
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(l[j], r[j], 1e-12 * std::abs(l[j]));
  }
}

TEST(ElemPow, Examples) {
  expect_vec(elem_pow(RealVec{{1.0, 3.0}}, 2.0), {1.0, 9.0});
  expect_vec(elem_pow(RealVec{{4.0, 9.0}}, -0.5), {0.5, 1.0 / 3.0});
  const RealVec x{{-2.0, 0.0, 3.5}};
  EXPECT_EQ(elem_pow(x, 1.0), x);
}

TEST(ElemPow, NonIntegerExponentNeedsPositiveBase) {
  EXPECT_THROW(elem_pow(RealVec{{-1.0, 2.0}}, 0.5), std::domain_error);
  EXPECT_THROW(elem_pow(RealVec{{0.0}}, -0.5), std::domain_error);
  EXPECT_NO_THROW(elem_pow(RealVec{{-1.0, 2.0}}, 3.0));
}

TEST(SgnReg, Examples) {
  expect_vec(sgn_reg(RealVec{{-0.2, 0.0, 3.0}}, SgnConfig{SgnMode::exact, 1e-3}), {-1.0, 0.0, 1.0});
  expect_vec(sgn_reg(RealVec{{5e-4}}, SgnConfig{SgnMode::boundary_layer, 1e-3}), {0.5}, 1e-15);
  expect_vec(sgn_reg(RealVec{{-2.0}}, SgnConfig{SgnMode::boundary_layer, 1e-3}), {-1.0});
}

TEST(SgnReg, LayerAgreesWithExactOutside) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const SgnConfig layer{SgnMode::boundary_layer, 0.05}, exact{SgnMode::exact, 0.05};
  for (int i = 0; i < 2000; ++i) {
    const double s = u(rng);
    if (std::abs(s) >= 0.05) EXPECT_EQ(sgn_reg(s, layer), sgn_reg(s, exact));
    else EXPECT_LE(std::abs(sgn_reg(s, layer)), 1.0);
  }
}
