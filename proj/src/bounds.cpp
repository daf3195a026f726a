#include "fileinsurer/bounds.hpp"

#include "fileinsurer/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fileinsurer {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// log(lambda^lambda (1-lambda)^(1-lambda)), i.e. minus the binary entropy in nats.
double neg_entropy(double lambda) {
  double v = 0;
  if (lambda > 0) v += lambda * std::log(lambda);
  if (lambda < 1) v += (1 - lambda) * std::log1p(-lambda);
  return v;
}

const double kLogEOver2Pi = 1.0 - std::log(2.0 * std::numbers::pi);

}  // namespace

std::vector<std::string> BoundInputs::violations() const {
  std::vector<std::string> out;
  if (!(lambda > 0 && lambda < 1)) out.emplace_back("lambda must lie in (0, 1)");
  if (!(c > 0 && c < 1)) out.emplace_back("c must lie in (0, 1)");
  if (!(k >= 1)) out.emplace_back("k must be at least 1");
  if (!(gammaVm > 0 && gammaVm <= 1)) out.emplace_back("gammaVm must lie in (0, 1]");
  if (!(r1 >= 1)) out.emplace_back("r1 must be at least 1");
  if (!(r2 > 0)) out.emplace_back("r2 must be positive");
  if (!(Ns >= 1)) out.emplace_back("N_s must be at least 1");
  if (!(capPara > 0)) out.emplace_back("capPara must be positive");
  if (!(minCapacity > 0) || !(minValue > 0)) out.emplace_back("minCapacity and minValue must be positive");
  return out;
}

void BoundInputs::validate() const {
  const auto v = violations();
  if (!v.empty()) throw Error(Errc::DomainError, v.front());
}

R1R2 compute_r1_r2(const std::vector<std::pair<Bytes, Tokens>>& files, const NetworkParams& params) {
  if (files.empty()) throw Error(Errc::EmptyFileSet);
  long double sizeSum = 0, weighted = 0, valueSum = 0;
  for (const auto& [size, value] : files) {
    if (size == 0) throw Error(Errc::DomainError, "file size must be positive");
    const long double v = value.units();
    sizeSum += size;
    weighted += static_cast<long double>(size) * v;
    valueSum += v;
  }
  const long double minValue = params.minValue.units();
  R1R2 r;
  r.r1 = static_cast<double>(weighted / (minValue * sizeSum));
  r.r2 = static_cast<double>(static_cast<long double>(params.minCapacity) * valueSum /
                             (minValue * sizeSum * params.capPara));
  return r;
}

double thm1_capacity_bound(const BoundInputs& in) {
  in.validate();
  const double total = in.Ns * in.minCapacity;
  return std::min(total / (2 * in.r1 * in.k), total / in.r2);
}

double thm2_log_bound(double Ns, double ratio) {
  if (!(ratio >= 0)) throw Error(Errc::DomainError, "capacity/file-size ratio must be non-negative");
  if (!(Ns >= 1)) throw Error(Errc::DomainError, "N_s must be at least 1");
  return std::log(Ns) - 0.144 * ratio;
}

double thm2_collision_bound(double Ns, double ratio) {
  const double lb = thm2_log_bound(Ns, ratio);
  return lb >= 0 ? 1.0 : std::exp(lb);
}

Thm3Terms thm3_robustness_bound(const BoundInputs& in) {
  in.validate();
  const double logLambda = std::log(in.lambda);
  Thm3Terms t;
  t.first = 5 * std::exp(in.k * logLambda);
  t.second = std::exp(in.k / 2 * logLambda);
  const double numer = 4 * ((kLogEOver2Pi - std::log(in.c)) / in.Ns - neg_entropy(in.lambda));
  t.third = numer / (in.gammaVm * in.k * -logLambda * in.capPara);
  t.bound = clamp01(std::max({t.first, t.second, t.third}));
  t.shortcutThird = 5e-6 / in.gammaVm;
  t.discrepancy = std::abs(t.third - t.shortcutThird) > 0.5 * std::max(t.third, t.shortcutThird);
  return t;
}

Thm4Terms thm4_deposit_ratio(const BoundInputs& in) {
  in.validate();
  if (!(in.Ns >= 2)) throw Error(Errc::DomainError, "N_s must be at least 2");
  const double logLambda = std::log(in.lambda);
  const double logNs = std::log(in.Ns);
  Thm4Terms t;
  t.first = 5 * std::exp((in.k - 1) * logLambda);
  t.second = std::exp((in.k / 2 - 1) * logLambda);
  t.third = 4 / (in.k * in.capPara) * (logNs / -logLambda + -std::log(in.c) / logNs);
  // A ratio above 1 is meaningful (deposit exceeding carried value), so no clamp.
  t.bound = std::max({t.first, t.second, t.third});
  return t;
}

KlCheck kl_lemma_check(double p, double x) {
  if (!(p > 0 && p <= 0.2)) throw Error(Errc::DomainError, "p must lie in (0, 1/5]");
  if (!(x >= 5 * p && x <= 1)) throw Error(Errc::DomainError, "x must lie in [5p, 1]");
  KlCheck k;
  const double head = x * std::log(x / p);
  const double tail = x < 1 ? (1 - x) * (std::log1p(-x) - std::log1p(-p)) : 0.0;
  k.dkl = head + tail;
  k.halfBound = 0.5 * head;
  k.holds = k.dkl >= k.halfBound;
  return k;
}

StirlingBound binom_stirling_upper(std::uint64_t Ns, double lambda) {
  if (!(lambda > 0 && lambda < 1)) throw Error(Errc::DomainError, "lambda must lie in (0, 1)");
  const double count = lambda * static_cast<double>(Ns);
  if (std::abs(count - std::round(count)) > 1e-9 * std::max(1.0, count))
    throw Error(Errc::NonIntegralCount, "lambda * N_s = " + std::to_string(count));
  StirlingBound b;
  b.logValue = kLogEOver2Pi - static_cast<double>(Ns) * neg_entropy(lambda);
  b.logWithSqrtFactor = b.logValue - 0.5 * std::log(static_cast<double>(Ns) * lambda * (1 - lambda));
  const double v = std::exp(b.logValue);
  if (std::isfinite(v)) b.value = v;
  return b;
}

}  // namespace fileinsurer
