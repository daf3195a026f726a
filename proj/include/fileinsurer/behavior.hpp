#pragma once

#include "fileinsurer/engine.hpp"

#include <map>
#include <optional>
#include <string_view>

namespace fileinsurer {

enum class BehaviorKind {
  Honest,     // confirms transfers and proves before every CheckProof
  Silent,     // never answers
  NoConfirm,  // proves what it holds, never confirms transfers
  NoProve,    // confirms transfers, never proves
  ProveEvery, // confirms; proves only on every n-th ProofCycle
};

struct Behavior {
  BehaviorKind kind = BehaviorKind::Honest;
  std::uint32_t every = 1;
};

std::string_view to_string(BehaviorKind k);
std::optional<BehaviorKind> parse_behavior(std::string_view s);

/// Drives simulated providers from engine notices. Accounts without an
/// explicit behavior are honest.
class ProviderBehaviors : public EngineObserver {
 public:
  void set(AccountId provider, Behavior b) { behaviors_[provider] = b; }
  Behavior get(AccountId provider) const;

  void before_task(Engine& engine, const PendingTask& task) override;
  void on_notice(Engine& engine, const Notice& notice) override;

  std::uint64_t rejectedRequests = 0;

 private:
  bool confirms(AccountId a) const;
  bool proves(AccountId a, Tick now, Tick proofCycle) const;

  std::map<AccountId, Behavior> behaviors_;
};

}  // namespace fileinsurer
