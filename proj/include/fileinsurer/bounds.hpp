#pragma once

#include "fileinsurer/params.hpp"
#include "fileinsurer/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace fileinsurer {

/// Inputs to the capacity, robustness and deposit bounds. All logs natural.
struct BoundInputs {
  double k = 20;
  double Ns = 1e6;
  double capPara = 1e3;
  double lambda = 0.5;
  double c = 1e-18;
  double gammaVm = 0.005;  // N_v / N_v^m
  double minCapacity = 64.0 * (1ull << 30);
  double minValue = 1.0;
  double r1 = 1.0;
  double r2 = 1.0;

  std::vector<std::string> violations() const;
  /// Throws Error(DomainError).
  void validate() const;
};

struct R1R2 {
  double r1 = 0;
  double r2 = 0;
};

/// Throws EmptyFileSet for no files and DomainError for a zero size.
R1R2 compute_r1_r2(const std::vector<std::pair<Bytes, Tokens>>& files, const NetworkParams& params);

/// min(N_s minCapacity / (2 r1 k), N_s minCapacity / r2), in bytes.
double thm1_capacity_bound(const BoundInputs& in);

/// N_s exp(-0.144 ratio), clamped to [0, 1].
double thm2_collision_bound(double Ns, double capacityOverFileSize);
/// Unclamped natural log of the same expression.
double thm2_log_bound(double Ns, double capacityOverFileSize);

struct Thm3Terms {
  double first = 0;    // 5 lambda^k
  double second = 0;   // lambda^(k/2)
  double third = 0;    // displayed formula
  double bound = 0;    // max of the three, clamped to [0, 1]
  /// The worked-example shortcut 5e-6 / gammaVm for the third term. It does
  /// not follow from the displayed formula; reported side by side.
  double shortcutThird = 0;
  bool discrepancy = false;
};

Thm3Terms thm3_robustness_bound(const BoundInputs& in);

struct Thm4Terms {
  double first = 0;   // 5 lambda^(k-1)
  double second = 0;  // lambda^(k/2 - 1)
  double third = 0;   // 4/(k capPara) (log N_s / log(1/lambda) + log(1/c) / log N_s)
  double bound = 0;
};

/// Requires N_s >= 2.
Thm4Terms thm4_deposit_ratio(const BoundInputs& in);

struct KlCheck {
  double dkl = 0;
  double halfBound = 0;
  bool holds = false;
};

/// D_KL(x || p) against x log(x/p) / 2 on 0 < p <= 1/5, 5p <= x <= 1.
/// Throws DomainError outside that region.
KlCheck kl_lemma_check(double p, double x);

struct StirlingBound {
  double logValue = 0;
  std::optional<double> value;  // when exp(logValue) is finite
  /// Log of the sharper form that keeps sqrt(1 / (N_s lambda (1-lambda))).
  /// The plain form drops that factor, which is only valid once
  /// N_s lambda (1-lambda) >= 1.
  double logWithSqrtFactor = 0;
};

/// e/(2 pi) * (lambda^lambda (1-lambda)^(1-lambda))^(-N_s). Throws
/// NonIntegralCount unless lambda * N_s is an integer.
StirlingBound binom_stirling_upper(std::uint64_t Ns, double lambda);

}  // namespace fileinsurer
