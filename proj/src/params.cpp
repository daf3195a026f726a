#include "fileinsurer/params.hpp"

#include "fileinsurer/error.hpp"

#include <cmath>

namespace fileinsurer {

std::vector<std::string> NetworkParams::violations() const {
  std::vector<std::string> out;
  if (minCapacity == 0) out.emplace_back("minCapacity must be positive");
  if (minValue <= Tokens{}) out.emplace_back("minValue must be positive");
  if (k < 1) out.emplace_back("k must be at least 1");
  if (crSize == 0) out.emplace_back("crSize must be positive");
  if (sizeLimit == 0) out.emplace_back("sizeLimit must be positive");
  if (sizeLimit > minCapacity) out.emplace_back("sizeLimit must not exceed minCapacity");
  if (!(proofDue < proofDeadline)) out.emplace_back("ProofDue must be below ProofDeadline");
  if (!(proofCycle <= proofDue)) out.emplace_back("ProofCycle must not exceed ProofDue");
  if (proofCycle == 0) out.emplace_back("ProofCycle must be positive");
  if (!(c > 0.0 && c < 1.0)) out.emplace_back("c must lie in (0, 1)");
  if (!(capPara > 0.0) || !std::isfinite(capPara)) out.emplace_back("capPara must be positive");
  if (!(gammaDeposit >= 0.0) || !std::isfinite(gammaDeposit)) out.emplace_back("gammaDeposit must be non-negative");
  if (!(delayPerSize >= 0.0) || !std::isfinite(delayPerSize)) out.emplace_back("DelayPerSize must be non-negative");
  if (!(avgRefresh > 0.0) || !std::isfinite(avgRefresh)) out.emplace_back("AvgRefresh must be positive");
  if (!(penaltyFraction >= 0.0 && penaltyFraction <= 1.0)) out.emplace_back("penaltyFraction must lie in [0, 1]");
  return out;
}

void NetworkParams::validate() const {
  auto v = violations();
  if (!v.empty()) throw Error(Errc::InvalidParams, v.front());
}

std::vector<std::string> FeeSchedule::violations(const NetworkParams& params) const {
  std::vector<std::string> out;
  auto bad = [](double x) { return !(x >= 0.0) || !std::isfinite(x); };
  if (bad(rentPerByteReplicaCycle)) out.emplace_back("rent rate must be non-negative");
  if (bad(gas.checkAlloc) || bad(gas.checkProof) || bad(gas.refresh) || bad(gas.checkRefresh))
    out.emplace_back("gas prices must be non-negative");
  if (bad(trafficPerByte)) out.emplace_back("traffic rate must be non-negative");
  if (periodLength == 0 || params.proofCycle == 0 || periodLength % params.proofCycle != 0)
    out.emplace_back("periodLength must be a positive multiple of ProofCycle");
  return out;
}

void FeeSchedule::validate(const NetworkParams& params) const {
  auto v = violations(params);
  if (!v.empty()) throw Error(Errc::InvalidParams, v.front());
}

}  // namespace fileinsurer
