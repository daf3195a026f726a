#pragma once

#include "fileinsurer/behavior.hpp"
#include "fileinsurer/engine.hpp"

#include <gtest/gtest.h>

#include <memory>

namespace fitest {

using namespace fileinsurer;

inline NetworkParams small_params() {
  NetworkParams p;
  p.minCapacity = 64 * 1024;
  p.crSize = 1024;
  p.sizeLimit = 64 * 1024;
  p.minValue = Tokens::whole(1);
  p.k = 2;
  p.capPara = 10;
  p.gammaDeposit = 0.5;
  p.delayPerSize = 1.0 / 1024;
  p.avgRefresh = 1000;
  p.proofCycle = 10;
  p.proofDue = 20;
  p.proofDeadline = 60;
  p.penaltyFraction = 0.01;
  return p;
}

inline FeeSchedule small_fees() {
  FeeSchedule f;
  f.rentPerByteReplicaCycle = 1e-6;
  f.gas = {0.001, 0.001, 0.002, 0.002};
  f.trafficPerByte = 1e-6;
  f.periodLength = 50;
  return f;
}

// Account 0 is the client, 1..n are providers with 1000 tokens each.
struct Net {
  explicit Net(std::uint32_t providers, NetworkParams p = small_params(), FeeSchedule f = small_fees(),
               Tokens clientBalance = Tokens::whole(100), std::uint64_t seed = 1) {
    std::map<AccountId, Tokens> balances{{AccountId{0}, clientBalance}};
    for (std::uint32_t i = 1; i <= providers; ++i) balances[AccountId{i}] = Tokens::whole(1000);
    EngineOptions o;
    o.testMode = true;
    engine = std::make_unique<Engine>(init_network(p, f, balances), seed, o);
    engine->set_observer(&behaviors);
  }
  Engine& e() { return *engine; }
  const NetworkState& st() const { return engine->state(); }
  const FileRecord& file(FileId id) const { return *st().find_file(id); }
  const Sector& sector(SectorRef s) const { return *st().find_sector(s); }
  void expect_consistent() const {
    EXPECT_TRUE(find_violations(st()).empty());
    EXPECT_EQ(circulating_total(st()), st().ledger.minted);
  }

  ProviderBehaviors behaviors;
  std::unique_ptr<Engine> engine;
  const AccountId client{0};
};

template <typename Fn>
Errc error_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::InvariantViolation;
}

}  // namespace fitest
