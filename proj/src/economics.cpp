#include "fileinsurer/economics.hpp"

#include "fileinsurer/error.hpp"

#include <cmath>
#include <map>

namespace fileinsurer {

namespace {

Tokens& balance_of(NetworkState& state, AccountId id) {
  auto it = state.ledger.accounts.find(id);
  if (it == state.ledger.accounts.end()) throw Error(Errc::UnknownAccount, std::to_string(id.value));
  return it->second;
}

Tokens round_tokens(long double tokens) {
  return Tokens::from_units(static_cast<std::int64_t>(std::llround(tokens * Tokens::kUnitsPerToken)));
}

}  // namespace

Tokens compute_deposit(Bytes capacity, const NetworkParams& params) {
  if (capacity == 0 || capacity % params.minCapacity != 0)
    throw Error(Errc::BadCapacity, "capacity must be a positive multiple of minCapacity");
  return deposit_formula(capacity, params);
}

CycleCharge cycle_cost(const FeeSchedule& fees, const NetworkParams& params, const FileDescriptor& f) {
  CycleCharge c;
  c.rent = round_tokens(static_cast<long double>(fees.rentPerByteReplicaCycle) * f.size * f.cp);
  c.gas = round_tokens(static_cast<long double>(fees.gas.checkProof) +
                       (static_cast<long double>(fees.gas.refresh) + fees.gas.checkRefresh) / params.avgRefresh);
  return c;
}

CycleCharge charge_rent_and_gas(NetworkState& state, FileId file) {
  const FileRecord* rec = state.find_file(file);
  if (!rec) throw Error(Errc::UnknownFile);
  if (rec->desc.state != FileState::Normal) throw Error(Errc::BadState, "only normal files are charged");
  const CycleCharge c = cycle_cost(state.fees, state.params, rec->desc);
  Tokens& bal = balance_of(state, rec->desc.owner);
  if (bal < c.total()) throw Error(Errc::InsufficientBalance);
  bal -= c.total();
  state.ledger.networkPool += c.rent;
  state.ledger.burnSink += c.gas;
  return c;
}

std::vector<RentPayout> distribute_rent(NetworkState& state, Tick periodStart) {
  std::map<AccountId, unsigned __int128> capacityByOwner;
  unsigned __int128 total = 0;
  for (const auto& s : state.sectors) {
    if (!s.live() || s.registeredAt > periodStart) continue;
    capacityByOwner[s.ref.owner] += s.capacity;
    total += s.capacity;
  }
  std::vector<RentPayout> out;
  const Tokens pool = state.ledger.networkPool;
  if (total == 0 || pool <= Tokens{}) return out;
  for (const auto& [owner, cap] : capacityByOwner) {
    const auto share = static_cast<std::int64_t>(static_cast<unsigned __int128>(pool.units()) * cap / total);
    if (share == 0) continue;
    const Tokens amount = Tokens::from_units(share);
    state.ledger.networkPool -= amount;
    balance_of(state, owner) += amount;
    out.push_back({owner, amount});
  }
  return out;
}

Tokens traffic_fee(const FeeSchedule& fees, Bytes bytes) {
  return round_tokens(static_cast<long double>(fees.trafficPerByte) * bytes);
}

Tokens settle_traffic_fee(NetworkState& state, const EntryKey& key, AccountId payer, AccountId provider,
                          Bytes bytes) {
  const Tokens fee = traffic_fee(state.fees, bytes);
  if (fee <= Tokens{}) return Tokens{};
  Tokens& bal = balance_of(state, payer);
  if (bal < fee) throw Error(Errc::InsufficientBalance, "traffic fee escrow");
  refund_traffic_fee(state, key);
  bal -= fee;
  state.ledger.escrowPool += fee;
  state.ledger.escrows[key] = Escrow{payer, provider, fee};
  return fee;
}

Tokens release_traffic_fee(NetworkState& state, const EntryKey& key) {
  auto it = state.ledger.escrows.find(key);
  if (it == state.ledger.escrows.end()) return Tokens{};
  const Escrow e = it->second;
  state.ledger.escrows.erase(it);
  state.ledger.escrowPool -= e.amount;
  balance_of(state, e.provider) += e.amount;
  return e.amount;
}

Tokens refund_traffic_fee(NetworkState& state, const EntryKey& key) {
  auto it = state.ledger.escrows.find(key);
  if (it == state.ledger.escrows.end()) return Tokens{};
  const Escrow e = it->second;
  state.ledger.escrows.erase(it);
  state.ledger.escrowPool -= e.amount;
  balance_of(state, e.payer) += e.amount;
  return e.amount;
}

Confiscation confiscate(NetworkState& state, const SectorRef& ref) {
  Sector* s = state.find_sector(ref);
  if (!s) throw Error(Errc::UnknownSector, to_string(ref));
  if (!s->live()) throw Error(Errc::BadState, "sector " + to_string(ref) + " is " + std::string(to_string(s->state)));

  Confiscation out;
  out.amount = s->deposit;
  state.ledger.confiscatedPool += s->deposit;
  s->deposit = Tokens{};
  s->state = SectorState::Corrupted;
  state.normalCapacity.set(state.sectorIndex.at(ref), 0);

  // Replicas stored here are gone. Transfers already leaving this sector keep
  // going (their destination can rebuild from other holders).
  const std::vector<EntryKey> held(s->holding.begin(), s->holding.end());
  for (const auto& key : held) {
    set_prev(state, key, std::nullopt);
    AllocEntry& e = state.entry(key);
    if (e.state == EntryState::Normal) {
      e.state = EntryState::Corrupted;
      e.last.reset();
      out.corruptedEntries.push_back(key);
    }
  }
  // Uploads already confirmed into this sector are destroyed as well.
  const std::vector<EntryKey> arriving(s->incoming.begin(), s->incoming.end());
  for (const auto& key : arriving) {
    FileRecord& rec = state.files.at(key.file);
    AllocEntry& e = state.entry(key);
    if (!rec.stored && e.state == EntryState::Confirm && !e.prev) {
      set_next(state, key, std::nullopt);
      e.state = EntryState::Corrupted;
      e.last.reset();
      out.corruptedEntries.push_back(key);
    }
  }
  s->freeCap = s->capacity;
  s->crCount = 0;
  return out;
}

Compensation compensate(NetworkState& state, FileId file) {
  const FileRecord* rec = state.find_file(file);
  if (!rec) throw Error(Errc::UnknownFile);
  Compensation c;
  const Tokens owed = rec->desc.value;
  c.paid = state.ledger.confiscatedPool < owed ? state.ledger.confiscatedPool : owed;
  c.shortfall = owed - c.paid;
  state.ledger.confiscatedPool -= c.paid;
  balance_of(state, rec->desc.owner) += c.paid;
  return c;
}

Tokens penalize(NetworkState& state, const SectorRef& ref) {
  Sector* s = state.find_sector(ref);
  if (!s) throw Error(Errc::UnknownSector, to_string(ref));
  if (!s->live()) throw Error(Errc::BadState, "cannot penalize a " + std::string(to_string(s->state)) + " sector");
  const auto amount = Tokens::from_units(static_cast<std::int64_t>(
      std::llround(static_cast<long double>(s->deposit.units()) * state.params.penaltyFraction)));
  s->deposit -= amount;
  state.ledger.burnSink += amount;
  ++s->penaltyCount;
  return amount;
}

}  // namespace fileinsurer
