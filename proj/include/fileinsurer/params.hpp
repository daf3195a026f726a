#pragma once

#include "fileinsurer/types.hpp"

#include <string>
#include <vector>

namespace fileinsurer {

/// Network-wide protocol constants. Defaults follow the worked example
/// (k = 20, capPara = 1000, c = 1e-18, 64 GiB minimum sector).
struct NetworkParams {
  Bytes minCapacity = Bytes{64} << 30;
  Tokens minValue = Tokens::whole(1);
  std::uint32_t k = 20;
  double capPara = 1000.0;
  double gammaDeposit = 0.0046;
  double delayPerSize = 1.0 / static_cast<double>(Bytes{1} << 30);  // ticks per byte
  double avgRefresh = 100.0;                                         // in ProofCycles
  Tick proofCycle = 10;
  Tick proofDue = 20;
  Tick proofDeadline = 60;
  Bytes crSize = (Bytes{64} << 30) / 64;
  Bytes sizeLimit = (Bytes{64} << 30) / 1000;
  double c = 1e-18;
  double penaltyFraction = 0.01;

  /// Human-readable description of each violated invariant; empty when valid.
  std::vector<std::string> violations() const;
  /// Throws Error(InvalidParams) naming the first violation.
  void validate() const;
};

struct GasTable {
  double checkAlloc = 0.0;
  double checkProof = 0.0;
  double refresh = 0.0;
  double checkRefresh = 0.0;
};

/// Rates are in tokens; rent is per byte per replica per ProofCycle.
struct FeeSchedule {
  double rentPerByteReplicaCycle = 0.0;
  GasTable gas;
  double trafficPerByte = 0.0;
  Tick periodLength = 100;

  std::vector<std::string> violations(const NetworkParams& params) const;
  void validate(const NetworkParams& params) const;
};

}  // namespace fileinsurer
