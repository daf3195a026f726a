#include "fileinsurer/bounds.hpp"
#include "fileinsurer/error.hpp"
#include "fileinsurer/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fileinsurer;

namespace {

// Mean of N(mu, sigma^2) conditioned on being positive.
double truncated_normal_mean(double mu, double sigma) {
  const double a = -mu / sigma;
  const double pdf = std::exp(-a * a / 2) / std::sqrt(2 * std::numbers::pi);
  const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
  return mu + sigma * pdf / tail;
}

double sample_mean(SizeDist d, int n, std::uint64_t seed, double* minimum = nullptr) {
  RngStream rng(seed);
  double sum = 0, lo = 1e300;
  for (int i = 0; i < n; ++i) {
    const double x = sample_file_size(d, rng);
    sum += x;
    lo = std::min(lo, x);
  }
  if (minimum) *minimum = lo;
  return sum / n;
}

}  // namespace

TEST(FileSizes, Supports) {
  RngStream rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = sample_file_size(SizeDist::Uniform01, rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = sample_file_size(SizeDist::Uniform12, rng);
    ASSERT_GE(v, 1.0);
    ASSERT_LT(v, 2.0);
  }
}

TEST(FileSizes, ExponentialMean) {
  EXPECT_NEAR(sample_mean(SizeDist::Exponential, 1000000, 2), 1.0, 0.01);
}

TEST(FileSizes, TruncatedNormalMeans) {
  const double m1 = truncated_normal_mean(1.0, 1.0);
  EXPECT_NEAR(m1, 1.2876, 1e-4);
  double lo = 0;
  EXPECT_NEAR(sample_mean(SizeDist::NormalMuEqVar, 1000000, 3, &lo), m1, 0.02 * m1);
  EXPECT_GT(lo, 0.0);
  const double m2 = truncated_normal_mean(1.0, std::sqrt(0.5));
  EXPECT_NEAR(sample_mean(SizeDist::NormalMuEq2Var, 1000000, 4, &lo), m2, 0.02 * m2);
  EXPECT_GT(lo, 0.0);
}

TEST(FileSizes, NamesRoundTrip) {
  for (auto d : kAllSizeDists) EXPECT_EQ(parse_size_dist(to_string(d)), d);
  EXPECT_EQ(parse_table3_mode("refresh"), Table3Mode::Refresh);
  EXPECT_FALSE(parse_size_dist("cauchy").has_value());
}

TEST(Table3, SingleSectorHoldsEverything) {
  for (auto mode : {Table3Mode::Reallocate, Table3Mode::Refresh}) {
    ExperimentConfig c;
    c.Ncp = 1000;
    c.Ns = 1;
    c.mode = mode;
    c.trials = 3;
    EXPECT_NEAR(run_table3(c).maxUsage, 0.5, 1e-12);
    c.capacityFactor = 4;
    EXPECT_NEAR(run_table3(c).maxUsage, 0.25, 1e-12);
  }
}

TEST(Table3, FirstReferenceCell) {
  ExperimentConfig c;
  c.Ncp = 100000;
  c.Ns = 20;
  c.trials = 100;
  c.seed = 20220101;
  EXPECT_NEAR(run_table3(c).maxUsage, 0.525, 0.03);
}

TEST(Table3, DeterministicAndThreadIndependent) {
  ExperimentConfig c;
  c.Ncp = 20000;
  c.Ns = 50;
  c.dist = SizeDist::Exponential;
  c.trials = 8;
  c.seed = 5;
  const double one = run_table3(c).maxUsage;
  c.threads = 3;
  EXPECT_EQ(run_table3(c).maxUsage, one);
  c.mode = Table3Mode::Refresh;
  EXPECT_EQ(run_table3(c).maxUsage, run_table3(c).maxUsage);
}

TEST(Table3, InvalidConfig) {
  ExperimentConfig c;
  c.Ns = 0;
  EXPECT_THROW(run_table3(c), Error);
  c = {};
  c.capacityFactor = 0.5;
  EXPECT_THROW(run_table3(c), Error);
}

TEST(CollisionEmpirical, SmallRatioStaysBelowBound) {
  const auto r = verify_thm2_empirical(10, 50, 0.5, 100000, 9);
  EXPECT_NEAR(r.bound, 10 * std::exp(-0.144 * 50), 1e-12);
  EXPECT_LE(r.observedFreq, r.bound);
}

TEST(CollisionEmpirical, LargeRatioNeverHits) {
  const auto r = verify_thm2_empirical(100, 1000, 0.5, 10000, 10);
  EXPECT_EQ(r.hits, 0u);
  EXPECT_LT(r.bound, 1e-50);
}

TEST(CollisionEmpirical, VacuousAndEmptyRegimes) {
  const auto v = verify_thm2_empirical(4, 8, 0.5, 1000, 11);
  EXPECT_EQ(v.bound, 1.0);
  EXPECT_LE(v.observedFreq, 1.0);
  EXPECT_EQ(verify_thm2_empirical(10, 50, 0.0, 100, 12).observedFreq, 0.0);
  EXPECT_THROW(verify_thm2_empirical(10, 50, 0.6, 10, 1), Error);
}
