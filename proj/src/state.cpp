#include "fileinsurer/state.hpp"

#include "fileinsurer/error.hpp"

#include <cstdio>

namespace fileinsurer {

std::string_view to_string(SectorState s) {
  switch (s) {
    case SectorState::Normal: return "normal";
    case SectorState::Disabled: return "disabled";
    case SectorState::Corrupted: return "corrupted";
    case SectorState::Removed: return "removed";
  }
  return "?";
}

std::string_view to_string(FileState s) {
  switch (s) {
    case FileState::Normal: return "normal";
    case FileState::Discard: return "discard";
    case FileState::Removed: return "removed";
    case FileState::Lost: return "lost";
  }
  return "?";
}

std::string_view to_string(EntryState s) {
  switch (s) {
    case EntryState::Alloc: return "alloc";
    case EntryState::Confirm: return "confirm";
    case EntryState::Normal: return "normal";
    case EntryState::Corrupted: return "corrupted";
  }
  return "?";
}

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::CheckAlloc: return "CheckAlloc";
    case TaskKind::CheckProof: return "CheckProof";
    case TaskKind::CheckRefresh: return "CheckRefresh";
  }
  return "?";
}

Bytes unsealed_space(const Sector& s, Bytes crSize) { return s.freeCap - s.crCount * crSize; }

void refill_crs(Sector& s, Bytes crSize) { s.crCount = s.freeCap / crSize; }

void reserve_space(NetworkState& state, const SectorRef& ref, Bytes bytes) {
  Sector& s = *state.find_sector(ref);
  if (!s.live()) return;
  s.freeCap -= bytes;
  refill_crs(s, state.params.crSize);
}

void release_space(NetworkState& state, const SectorRef& ref, Bytes bytes) {
  Sector* s = state.find_sector(ref);
  if (!s || !s->live()) return;
  s->freeCap += bytes;
  refill_crs(*s, state.params.crSize);
}

void set_prev(NetworkState& state, const EntryKey& key, std::optional<SectorRef> sector) {
  AllocEntry& e = state.entry(key);
  if (e.prev) state.find_sector(*e.prev)->holding.erase(key);
  e.prev = sector;
  if (sector) state.find_sector(*sector)->holding.insert(key);
}

void set_next(NetworkState& state, const EntryKey& key, std::optional<SectorRef> sector) {
  AllocEntry& e = state.entry(key);
  if (e.next) state.find_sector(*e.next)->incoming.erase(key);
  e.next = sector;
  if (sector) state.find_sector(*sector)->incoming.insert(key);
}

Sector* NetworkState::find_sector(const SectorRef& ref) {
  auto it = sectorIndex.find(ref);
  return it == sectorIndex.end() ? nullptr : &sectors[it->second];
}

const Sector* NetworkState::find_sector(const SectorRef& ref) const {
  auto it = sectorIndex.find(ref);
  return it == sectorIndex.end() ? nullptr : &sectors[it->second];
}

FileRecord* NetworkState::find_file(FileId id) {
  auto it = files.find(id);
  return it == files.end() ? nullptr : &it->second;
}

const FileRecord* NetworkState::find_file(FileId id) const {
  auto it = files.find(id);
  return it == files.end() ? nullptr : &it->second;
}

AllocEntry& NetworkState::entry(const EntryKey& key) { return files.at(key.file).entries.at(key.index - 1); }

const AllocEntry& NetworkState::entry(const EntryKey& key) const {
  return files.at(key.file).entries.at(key.index - 1);
}

NetworkState init_network(const NetworkParams& params, const FeeSchedule& fees,
                          const std::map<AccountId, Tokens>& initialBalances) {
  params.validate();
  fees.validate(params);
  NetworkState state;
  state.params = params;
  state.fees = fees;
  for (const auto& [id, amount] : initialBalances) {
    if (amount < Tokens{}) throw Error(Errc::InvalidParams, "negative initial balance");
    state.ledger.accounts[id] = amount;
    state.ledger.minted += amount;
  }
  return state;
}

Tokens deposit_formula(Bytes capacity, const NetworkParams& params) {
  const long double multiples = static_cast<long double>(capacity) / static_cast<long double>(params.minCapacity);
  const long double units = multiples * params.gammaDeposit * params.capPara *
                            static_cast<long double>(params.minValue.units());
  return Tokens::from_units(static_cast<std::int64_t>(std::llround(units)));
}

Tokens circulating_total(const NetworkState& state) {
  Tokens total = state.ledger.networkPool + state.ledger.burnSink + state.ledger.confiscatedPool +
                 state.ledger.escrowPool;
  for (const auto& [id, balance] : state.ledger.accounts) total += balance;
  for (const auto& s : state.sectors) total += s.deposit;
  return total;
}

namespace {

std::string describe(const EntryKey& k) {
  return "entry(" + std::to_string(k.file.value) + "," + std::to_string(k.index) + ")";
}

}  // namespace

std::vector<std::string> find_violations(const NetworkState& state) {
  std::vector<std::string> out;
  const auto& p = state.params;
  for (auto& v : p.violations()) out.push_back("params: " + v);

  // Expected per-sector usage and reverse indexes, rebuilt from the table.
  std::map<SectorRef, Bytes> used;
  std::map<SectorRef, std::set<EntryKey>> holding;
  std::map<SectorRef, std::set<EntryKey>> incoming;

  for (const auto& [id, rec] : state.files) {
    const auto& f = rec.desc;
    const std::string fname = "file " + std::to_string(id.value);
    if (f.id != id) out.push_back(fname + ": id mismatch");
    if (f.value <= Tokens{} || f.value.units() % p.minValue.units() != 0)
      out.push_back(fname + ": value not a positive multiple of minValue");
    else if (static_cast<std::int64_t>(f.cp) != static_cast<std::int64_t>(p.k) * (f.value.units() / p.minValue.units()))
      out.push_back(fname + ": cp != k * value / minValue");
    if (f.size > p.sizeLimit) out.push_back(fname + ": size exceeds sizeLimit");
    if (f.state == FileState::Removed || f.state == FileState::Lost) {
      if (!rec.entries.empty()) out.push_back(fname + ": removed file still has entries");
      continue;
    }
    if (rec.entries.size() != f.cp) out.push_back(fname + ": entry count != cp");
    for (std::uint32_t i = 1; i <= rec.entries.size(); ++i) {
      const auto& e = rec.entries[i - 1];
      const EntryKey key{id, i};
      const std::string ename = describe(key);
      switch (e.state) {
        case EntryState::Alloc:
        case EntryState::Confirm:
          if (!e.next) out.push_back(ename + ": in-flight entry without next");
          break;
        case EntryState::Normal:
          if (!e.prev || e.next) out.push_back(ename + ": normal entry must have prev and no next");
          break;
        case EntryState::Corrupted:
          if (e.prev || e.next) out.push_back(ename + ": corrupted entry must have neither prev nor next");
          break;
      }
      if (e.prev) {
        const Sector* s = state.find_sector(*e.prev);
        if (!s || !s->live()) out.push_back(ename + ": prev sector is not live");
        used[*e.prev] += f.size;
        holding[*e.prev].insert(key);
      }
      if (e.next) {
        used[*e.next] += f.size;
        incoming[*e.next].insert(key);
      }
    }
  }

  for (std::size_t idx = 0; idx < state.sectors.size(); ++idx) {
    const Sector& s = state.sectors[idx];
    const std::string sname = "sector " + to_string(s.ref);
    auto found = state.sectorIndex.find(s.ref);
    if (found == state.sectorIndex.end() || found->second != idx) out.push_back(sname + ": index mismatch");
    if (s.capacity == 0 || s.capacity % p.minCapacity != 0)
      out.push_back(sname + ": capacity not a positive multiple of minCapacity");
    const Bytes expectWeight = s.state == SectorState::Normal ? s.capacity : 0;
    if (idx >= state.normalCapacity.size() || state.normalCapacity.weight(idx) != expectWeight)
      out.push_back(sname + ": sampler weight out of sync");
    if (s.live()) {
      if (s.freeCap > s.capacity) out.push_back(sname + ": freeCap exceeds capacity");
      const Bytes u = used.count(s.ref) ? used.at(s.ref) : 0;
      if (u > s.capacity || s.freeCap != s.capacity - u)
        out.push_back(sname + ": freeCap != capacity - allocated replica sizes");
      if (s.crCount * p.crSize > s.freeCap || unsealed_space(s, p.crSize) >= p.crSize)
        out.push_back(sname + ": unsealed space not below one CR");
      const Tokens formula = deposit_formula(s.capacity, p);
      if (s.penaltyCount == 0 ? s.deposit != formula : s.deposit > formula)
        out.push_back(sname + ": deposit does not match formula");
      if (s.holding != (holding.count(s.ref) ? holding.at(s.ref) : std::set<EntryKey>{}))
        out.push_back(sname + ": holding index out of sync");
    } else {
      if (s.deposit != Tokens{}) out.push_back(sname + ": dead sector retains deposit");
      if (!s.holding.empty() || holding.count(s.ref)) out.push_back(sname + ": dead sector still holds replicas");
    }
    if (s.incoming != (incoming.count(s.ref) ? incoming.at(s.ref) : std::set<EntryKey>{}))
      out.push_back(sname + ": incoming index out of sync");
    if (s.state == SectorState::Removed && !s.incoming.empty())
      out.push_back(sname + ": removed sector has incoming replicas");
  }
  for (const auto& [ref, _] : used) {
    if (!state.find_sector(ref)) out.push_back("allocation references unknown sector " + to_string(ref));
  }

  Tokens escrowed;
  for (const auto& [key, esc] : state.ledger.escrows) escrowed += esc.amount;
  if (escrowed != state.ledger.escrowPool) out.push_back("ledger: escrow pool != sum of escrows");
  for (const auto& [id, bal] : state.ledger.accounts) {
    if (bal < Tokens{}) out.push_back("ledger: negative balance for account " + std::to_string(id.value));
  }
  if (state.ledger.confiscatedPool < Tokens{} || state.ledger.networkPool < Tokens{})
    out.push_back("ledger: negative pool");
  if (circulating_total(state) != state.ledger.minted) out.push_back("ledger: token conservation violated");

  for (const auto& t : state.pending) {
    if (t.time < state.clock) out.push_back("pending task scheduled in the past");
  }
  return out;
}

void validate_state(const NetworkState& state) {
  auto v = find_violations(state);
  if (!v.empty()) throw Error(Errc::InvariantViolation, v.front());
}

Json to_json(const SectorRef& s) { return Json::array({s.owner.value, s.id}); }

std::string hex_digest(const Digest& d) {
  std::string out;
  out.reserve(64);
  char buf[3];
  for (auto b : d) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    out += buf;
  }
  return out;
}

namespace {

Json opt_sector(const std::optional<SectorRef>& s) { return s ? to_json(*s) : Json(nullptr); }

}  // namespace

Json snapshot_json(const NetworkState& state) {
  Json j;
  j["clock"] = state.clock;
  Json sectors = Json::array();
  for (const auto& [ref, idx] : state.sectorIndex) {
    const Sector& s = state.sectors[idx];
    if (s.state == SectorState::Removed && !state.keepTombstones) continue;
    Json js;
    js["owner"] = s.ref.owner.value;
    js["id"] = s.ref.id;
    js["capacity"] = s.capacity;
    js["freeCap"] = s.freeCap;
    js["crCount"] = s.crCount;
    js["deposit"] = s.deposit.units();
    js["state"] = to_string(s.state);
    sectors.push_back(std::move(js));
  }
  j["sectors"] = std::move(sectors);
  Json files = Json::array();
  for (const auto& [id, rec] : state.files) {
    const auto& f = rec.desc;
    Json jf;
    jf["id"] = id.value;
    jf["owner"] = f.owner.value;
    jf["size"] = f.size;
    jf["value"] = f.value.units();
    jf["merkleRoot"] = hex_digest(f.merkleRoot);
    jf["cp"] = f.cp;
    jf["cntdown"] = f.cntdown;
    jf["state"] = to_string(f.state);
    Json entries = Json::array();
    for (const auto& e : rec.entries) {
      Json je;
      je["prev"] = opt_sector(e.prev);
      je["next"] = opt_sector(e.next);
      je["last"] = e.last ? Json(*e.last) : Json(nullptr);
      je["state"] = to_string(e.state);
      entries.push_back(std::move(je));
    }
    jf["alloc"] = std::move(entries);
    files.push_back(std::move(jf));
  }
  j["files"] = std::move(files);
  Json pending = Json::array();
  for (const auto& t : state.pending) {
    Json jt;
    jt["time"] = t.time;
    jt["seq"] = t.seq;
    jt["kind"] = to_string(t.kind);
    jt["file"] = t.file.value;
    if (t.kind == TaskKind::CheckRefresh) jt["index"] = t.index;
    pending.push_back(std::move(jt));
  }
  j["pending"] = std::move(pending);
  Json ledger;
  Json accounts = Json::array();
  for (const auto& [id, bal] : state.ledger.accounts) accounts.push_back(Json::array({id.value, bal.units()}));
  ledger["accounts"] = std::move(accounts);
  ledger["networkPool"] = state.ledger.networkPool.units();
  ledger["burnSink"] = state.ledger.burnSink.units();
  ledger["confiscatedPool"] = state.ledger.confiscatedPool.units();
  ledger["escrowPool"] = state.ledger.escrowPool.units();
  ledger["minted"] = state.ledger.minted.units();
  j["ledger"] = std::move(ledger);
  return j;
}

}  // namespace fileinsurer
