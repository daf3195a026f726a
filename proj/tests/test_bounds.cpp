#include "fileinsurer/bounds.hpp"
#include "fileinsurer/error.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace fileinsurer;
using quad = boost::multiprecision::cpp_bin_float_quad;

namespace {

BoundInputs worked() {
  BoundInputs in;
  in.k = 20;
  in.Ns = 1e6;
  in.capPara = 1e3;
  in.lambda = 0.5;
  in.c = 1e-18;
  in.gammaVm = 0.005;
  return in;
}

quad deposit_oracle(const BoundInputs& in) {
  const quad lam = in.lambda, ns = in.Ns, k = in.k;
  const quad a = 5 * pow(lam, k - 1);
  const quad b = pow(lam, k / 2 - 1);
  const quad c = quad(4) / (k * quad(in.capPara)) * (log(ns) / log(1 / lam) + log(1 / quad(in.c)) / log(ns));
  return std::max({a, b, c});
}

double round_sig(double x, int digits) {
  const double scale = std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(x))));
  return std::round(x * scale) / scale;
}

}  // namespace

TEST(R1R2, DirectFormula) {
  NetworkParams p;
  p.minCapacity = 64;
  p.capPara = 1000;
  p.minValue = Tokens::whole(1);
  auto r = compute_r1_r2({{10, Tokens::whole(3)}}, p);
  EXPECT_DOUBLE_EQ(r.r1, 3.0);
  EXPECT_NEAR(r.r2, 0.0192, 1e-15);
  r = compute_r1_r2({{10, Tokens::whole(1)}, {700, Tokens::whole(1)}}, p);
  EXPECT_DOUBLE_EQ(r.r1, 1.0);
  try {
    compute_r1_r2({}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyFileSet);
  }
}

TEST(CapacityBound, TakesTheSmallerTerm) {
  BoundInputs in;
  in.Ns = 100;
  in.minCapacity = 64;
  in.r1 = 1;
  in.k = 4;
  in.r2 = 10;
  EXPECT_DOUBLE_EQ(thm1_capacity_bound(in), 640.0);
  in.r2 = 1e-9;
  EXPECT_DOUBLE_EQ(thm1_capacity_bound(in), 800.0);
}

TEST(CollisionBound, WorkedExampleAndClamp) {
  EXPECT_LT(thm2_collision_bound(1e12, 1000), 1e-50);
  const quad oracle = quad(1e12) * exp(quad(-0.144) * 1000);
  EXPECT_NEAR(thm2_collision_bound(1e12, 1000) / oracle.convert_to<double>(), 1.0, 1e-12);
  EXPECT_EQ(thm2_collision_bound(1e12, 0), 1.0);
  EXPECT_EQ(thm2_collision_bound(4, 8), 1.0);
  EXPECT_NEAR(thm2_log_bound(1e12, 1000), std::log(1e12) - 144, 1e-9);
}

TEST(RobustnessBound, WorkedExampleTerms) {
  const auto t = thm3_robustness_bound(worked());
  EXPECT_NEAR(t.first, 5.0 * std::pow(2.0, -20), 1e-15);
  EXPECT_NEAR(t.second, std::pow(2.0, -10), 1e-15);
  EXPECT_EQ(round_sig(t.first, 1), 5e-6);
  EXPECT_EQ(round_sig(t.second, 1), 0.001);
  EXPECT_NEAR(t.third, 0.040, 5e-4);
  EXPECT_NEAR(t.shortcutThird, 1e-3, 1e-15);
  EXPECT_TRUE(t.discrepancy);
  EXPECT_NEAR(t.bound, std::max({t.first, t.second, t.third}), 1e-15);
}

TEST(DepositBound, WorkedExample) {
  const auto in = worked();
  const auto t = thm4_deposit_ratio(in);
  EXPECT_EQ(round_sig(t.bound, 2), 0.0046);
  EXPECT_NEAR(t.bound, deposit_oracle(in).convert_to<double>(), 1e-15);
  EXPECT_NEAR(t.first, 9.54e-6, 1e-8);
  EXPECT_NEAR(t.second, 1.95e-3, 1e-5);
}

TEST(DepositBound, AgreesWithQuadPrecisionOracle) {
  for (double k : {2.0, 4.0, 10.0, 20.0, 40.0}) {
    for (double ns : {8.0, 1e3, 1e6, 1e9}) {
      for (double lam : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        BoundInputs in = worked();
        in.k = k;
        in.Ns = ns;
        in.lambda = lam;
        const double oracle = deposit_oracle(in).convert_to<double>();
        EXPECT_NEAR(thm4_deposit_ratio(in).bound / oracle, 1.0, 1e-12) << k << " " << ns << " " << lam;
      }
    }
  }
}

TEST(Bounds, MonotoneInLambdaAndK) {
  BoundInputs in = worked();
  double prev3 = 0, prev4 = 0;
  for (double lam = 0.05; lam < 0.96; lam += 0.05) {
    in.lambda = lam;
    const double b3 = thm3_robustness_bound(in).bound, b4 = thm4_deposit_ratio(in).bound;
    EXPECT_GE(b3, prev3);
    EXPECT_GE(b4, prev4);
    prev3 = b3;
    prev4 = b4;
  }
  in.lambda = 0.999;
  EXPECT_GT(thm4_deposit_ratio(in).bound, 1.0);
  in = worked();
  double prev = 1e9;
  for (double k = 10; k <= 40; k += 2) {
    in.k = k;
    const double b = thm4_deposit_ratio(in).bound;
    EXPECT_LE(b, prev);
    prev = b;
  }
}

TEST(Bounds, DomainErrors) {
  BoundInputs in = worked();
  in.lambda = 1.0;
  EXPECT_THROW(thm3_robustness_bound(in), Error);
  in = worked();
  in.Ns = 1;
  EXPECT_THROW(thm4_deposit_ratio(in), Error);
  in = worked();
  in.c = 0;
  EXPECT_FALSE(in.violations().empty());
}

TEST(KlLemma, WorkedPoint) {
  const auto r = kl_lemma_check(0.1, 0.5);
  const quad p = 0.1, x = 0.5;
  const quad dkl = x * log(x / p) + (1 - x) * log((1 - x) / (1 - p));
  EXPECT_NEAR(r.dkl, dkl.convert_to<double>(), 1e-14);
  EXPECT_NEAR(r.dkl, 0.5108, 1e-4);
  EXPECT_NEAR(r.halfBound, 0.4024, 1e-4);
  EXPECT_TRUE(r.holds);
  EXPECT_THROW(kl_lemma_check(0.3, 0.9), Error);
  EXPECT_THROW(kl_lemma_check(0.1, 0.4), Error);
}

TEST(KlLemma, EdgeOfRegion) {
  EXPECT_TRUE(kl_lemma_check(0.2, 1.0).holds);
  EXPECT_TRUE(kl_lemma_check(0.2, 1.0).dkl > 0);
  EXPECT_TRUE(kl_lemma_check(1e-6, 5e-6).holds);
}

TEST(Stirling, TenChooseFive) {
  const auto b = binom_stirling_upper(10, 0.5);
  ASSERT_TRUE(b.value.has_value());
  EXPECT_NEAR(*b.value, std::exp(1.0) / (2 * M_PI) * 1024, 1e-9);
  EXPECT_NEAR(*b.value, 443, 1);
  EXPECT_GE(*b.value, 252.0);
  try {
    binom_stirling_upper(11, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonIntegralCount);
  }
}

TEST(Stirling, PlainFormAgainstExactBinomials) {
  using boost::multiprecision::cpp_int;
  // The plain form drops sqrt(1 / (N lambda (1 - lambda))), which exceeds 1
  // only while N lambda (1 - lambda) < 1, i.e. N = 2 at lambda = 1/2.
  for (std::uint64_t n = 2; n <= 60; n += 2) {
    cpp_int binom = 1;
    for (std::uint64_t i = 0; i < n / 2; ++i) binom = binom * (n - i) / (i + 1);
    const double exact = std::log(binom.convert_to<double>());
    const auto b = binom_stirling_upper(n, 0.5);
    if (n == 2) {
      EXPECT_LT(b.logValue, exact);
    } else {
      EXPECT_GE(b.logValue, exact) << n;
    }
    EXPECT_GE(b.logWithSqrtFactor, exact) << n;
  }
}
