#include "fileinsurer/behavior.hpp"

namespace fileinsurer {

std::string_view to_string(BehaviorKind k) {
  switch (k) {
    case BehaviorKind::Honest: return "honest";
    case BehaviorKind::Silent: return "silent";
    case BehaviorKind::NoConfirm: return "no_confirm";
    case BehaviorKind::NoProve: return "no_prove";
    case BehaviorKind::ProveEvery: return "prove_every";
  }
  return "?";
}

std::optional<BehaviorKind> parse_behavior(std::string_view s) {
  for (auto k : {BehaviorKind::Honest, BehaviorKind::Silent, BehaviorKind::NoConfirm, BehaviorKind::NoProve,
                 BehaviorKind::ProveEvery}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

Behavior ProviderBehaviors::get(AccountId provider) const {
  auto it = behaviors_.find(provider);
  return it == behaviors_.end() ? Behavior{} : it->second;
}

bool ProviderBehaviors::confirms(AccountId a) const {
  const auto k = get(a).kind;
  return k != BehaviorKind::Silent && k != BehaviorKind::NoConfirm;
}

bool ProviderBehaviors::proves(AccountId a, Tick now, Tick proofCycle) const {
  const Behavior b = get(a);
  switch (b.kind) {
    case BehaviorKind::Honest:
    case BehaviorKind::NoConfirm: return true;
    case BehaviorKind::Silent:
    case BehaviorKind::NoProve: return false;
    case BehaviorKind::ProveEvery: return b.every > 0 && (now / proofCycle) % b.every == 0;
  }
  return false;
}

void ProviderBehaviors::before_task(Engine& engine, const PendingTask& task) {
  if (task.kind != TaskKind::CheckProof) return;
  const NetworkState& st = engine.state();
  const FileRecord* rec = st.find_file(task.file);
  if (!rec || rec->desc.state != FileState::Normal) return;
  const Tick now = st.clock;
  // Collect first: proving mutates the record we are iterating.
  std::vector<std::pair<std::uint32_t, SectorRef>> todo;
  for (std::uint32_t i = 1; i <= rec->entries.size(); ++i) {
    const auto& e = rec->entries[i - 1];
    if (!e.prev || e.last == now) continue;
    const Sector* s = st.find_sector(*e.prev);
    if (!s || !s->live() || !proves(e.prev->owner, now, st.params.proofCycle)) continue;
    todo.emplace_back(i, *e.prev);
  }
  for (const auto& [i, s] : todo) {
    try {
      engine.file_prove(s.owner, task.file, i, s, Proof{now, true});
    } catch (const Error&) {
      ++rejectedRequests;
    }
  }
}

void ProviderBehaviors::on_notice(Engine& engine, const Notice& n) {
  if (n.kind != NoticeKind::StoreRequest && n.kind != NoticeKind::SwapRequest) return;
  if (!n.sector || !confirms(n.to)) return;
  try {
    engine.file_confirm(n.to, n.file, n.index, *n.sector);
  } catch (const Error&) {
    ++rejectedRequests;
  }
}

}  // namespace fileinsurer
