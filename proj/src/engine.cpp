#include "fileinsurer/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace fileinsurer {

std::string_view to_string(NoticeKind k) {
  switch (k) {
    case NoticeKind::StoreRequest: return "store_request";
    case NoticeKind::SwapRequest: return "swap_request";
    case NoticeKind::UploadSucceeded: return "upload_succeeded";
    case NoticeKind::UploadFailed: return "upload_failed";
    case NoticeKind::Discarded: return "discarded_insufficient_cost";
    case NoticeKind::FileRemoved: return "file_removed";
    case NoticeKind::FileLost: return "file_lost";
    case NoticeKind::Compensated: return "compensated";
    case NoticeKind::UnderCompensated: return "under_compensated";
    case NoticeKind::SectorCorrupted: return "sector_corrupted";
    case NoticeKind::Penalized: return "penalized";
    case NoticeKind::SectorRemoved: return "sector_removed";
    case NoticeKind::Collision: return "collision";
    case NoticeKind::RentPaid: return "rent_paid";
  }
  return "?";
}

Json to_json(const Notice& n) {
  Json j;
  j["kind"] = to_string(n.kind);
  j["to"] = n.to.value;
  if (n.file.value != 0) j["file"] = n.file.value;
  if (n.index != 0) j["index"] = n.index;
  if (n.sector) j["sector"] = to_json(*n.sector);
  if (n.from) j["from"] = to_json(*n.from);
  if (n.amount != Tokens{}) j["amount"] = n.amount.units();
  return j;
}

Json to_json(const EngineEvent& e) {
  Json j;
  j["seq"] = e.seq;
  j["time"] = e.time;
  j["kind"] = e.kind;
  j["payload"] = e.payload;
  Json outcome;
  if (e.rejected) {
    outcome["status"] = "rejected";
    outcome["reason"] = to_string(*e.rejected);
  } else {
    outcome["status"] = "ok";
  }
  Json notes = Json::array();
  for (const auto& n : e.notices) notes.push_back(to_json(n));
  outcome["notifications"] = std::move(notes);
  j["outcome"] = std::move(outcome);
  return j;
}

Json to_json(const EngineStats& s) {
  Json j;
  j["filesAdded"] = s.filesAdded;
  j["filesStored"] = s.filesStored;
  j["uploadFailures"] = s.uploadFailures;
  j["filesDiscarded"] = s.filesDiscarded;
  j["filesLost"] = s.filesLost;
  j["collisions"] = s.collisions;
  j["relocations"] = s.relocations;
  j["refreshConfirmed"] = s.refreshConfirmed;
  j["refreshFailed"] = s.refreshFailed;
  j["penalties"] = s.penalties;
  j["confiscations"] = s.confiscations;
  j["underCompensations"] = s.underCompensations;
  j["rentCharged"] = s.rentCharged.units();
  j["gasBurned"] = s.gasBurned.units();
  j["penaltiesBurned"] = s.penaltiesBurned.units();
  j["confiscated"] = s.confiscated.units();
  j["compensationPaid"] = s.compensationPaid.units();
  j["compensationShortfall"] = s.compensationShortfall.units();
  j["trafficPaid"] = s.trafficPaid.units();
  j["rentDistributed"] = s.rentDistributed.units();
  return j;
}

SectorRef random_sector(const NetworkState& state, RngStream& rng) {
  const Bytes total = state.normalCapacity.total();
  if (total == 0) throw Error(Errc::NoSectors);
  return state.sectors[state.normalCapacity.find(rng.uniform_below(total))].ref;
}

std::int64_t sample_exp(RngStream& rng, double mean) {
  const double draw = std::ceil(rng.exponential(mean));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(draw));
}

std::uint32_t random_index(RngStream& rng, std::uint32_t cp) {
  if (cp == 0) throw Error(Errc::PreconditionViolation, "file has no replicas");
  return static_cast<std::uint32_t>(rng.uniform_below(cp)) + 1;
}

Tick transfer_delay(const NetworkParams& params, Bytes size) {
  const double ticks = std::ceil(params.delayPerSize * static_cast<double>(size));
  return std::max<Tick>(1, static_cast<Tick>(ticks));
}

SegmentPlan split_large_file(const FileDescriptor& d, const NetworkParams& params) {
  if (d.size <= params.sizeLimit) throw Error(Errc::NotLarge);
  const Bytes dataSegments = (d.size + params.sizeLimit - 1) / params.sizeLimit;
  SegmentPlan plan;
  plan.segments = static_cast<std::uint32_t>(2 * dataSegments);
  plan.recoveryThreshold = static_cast<std::uint32_t>(dataSegments);
  const Bytes segSize = (d.size + dataSegments - 1) / dataSegments;
  const std::int64_t unit = params.minValue.units();
  // ceil(2 * value / m) rounded up to a multiple of minValue.
  const auto num = static_cast<__int128>(2) * d.value.units();
  const auto den = static_cast<__int128>(plan.segments) * unit;
  const auto units = static_cast<std::int64_t>((num + den - 1) / den);
  const Tokens segValue = Tokens::from_units(units * unit);
  for (std::uint32_t s = 0; s < plan.segments; ++s) {
    FileDescriptor seg;
    seg.size = segSize;
    seg.value = segValue;
    seg.merkleRoot = d.merkleRoot;
    seg.merkleRoot[31] ^= static_cast<std::uint8_t>(s & 0xFF);
    seg.merkleRoot[30] ^= static_cast<std::uint8_t>((s >> 8) & 0xFF);
    seg.cp = static_cast<std::uint32_t>(params.k * units);
    seg.owner = d.owner;
    plan.descriptors.push_back(seg);
  }
  return plan;
}

// ---------------------------------------------------------------------------

Engine::Engine(NetworkState state, std::uint64_t seed, EngineOptions options)
    : state_(std::move(state)), rng_(seed), options_(options) {
  state_.params.validate();
  state_.fees.validate(state_.params);
  state_.keepTombstones = options_.keepTombstones;
}

template <typename PayloadFn, typename Body>
auto Engine::request(std::string_view kind, PayloadFn&& payload, Body&& body) {
  open_event(kind);
  if (options_.recordEvents) current_->payload = payload();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      close_event(nullptr);
    } else {
      auto result = body();
      close_event(nullptr);
      return result;
    }
  } catch (const Error& e) {
    if (e.code() == Errc::InvariantViolation || !current_) throw;
    close_event(&e);
    throw;
  }
}

void Engine::open_event(std::string_view kind) {
  assert(!current_);
  current_.emplace();
  current_->time = state_.clock;
  current_->kind = std::string(kind);
}

void Engine::annotate(const char* key, Json value) {
  if (options_.recordEvents && current_) current_->payload[key] = std::move(value);
}

void Engine::notify(Notice n) {
  if (current_ && options_.recordEvents) current_->notices.push_back(n);
  if (observer_) outbox_.push_back(std::move(n));
}

void Engine::close_event(const Error* rejected) {
  EngineEvent ev = std::move(*current_);
  current_.reset();
  ev.seq = nextEventSeq_++;
  if (rejected) {
    ev.rejected = rejected->code();
    ev.reason = rejected->what();
  }
  if (options_.recordEvents) events_.push_back(std::move(ev));
  if (options_.testMode) validate_state(state_);
  flush_notices();
}

void Engine::flush_notices() {
  if (delivering_ || !observer_) return;
  delivering_ = true;
  struct Reset {
    bool& flag;
    ~Reset() { flag = false; }
  } reset{delivering_};
  while (!outbox_.empty()) {
    Notice n = std::move(outbox_.front());
    outbox_.pop_front();
    observer_->on_notice(*this, n);
  }
}

void Engine::note(std::string_view kind, Json payload) {
  open_event(kind);
  current_->payload = std::move(payload);
  close_event(nullptr);
}

Tokens& Engine::balance(AccountId id) {
  auto it = state_.ledger.accounts.find(id);
  if (it == state_.ledger.accounts.end()) throw Error(Errc::UnknownAccount, std::to_string(id.value));
  return it->second;
}

FileRecord& Engine::live_file(FileId id) {
  FileRecord* rec = state_.find_file(id);
  if (!rec || rec->desc.state == FileState::Removed || rec->desc.state == FileState::Lost)
    throw Error(Errc::UnknownFile, std::to_string(id.value));
  return *rec;
}

Sector& Engine::sector_ref(const SectorRef& ref) {
  Sector* s = state_.find_sector(ref);
  if (!s) throw Error(Errc::UnknownSector, to_string(ref));
  return *s;
}

void Engine::schedule(Tick at, TaskKind kind, FileId file, std::uint32_t index) {
  state_.pending.insert(PendingTask{at, state_.nextTaskSeq++, kind, file, index});
}

// --- client requests --------------------------------------------------------

FileId Engine::file_add(AccountId client, Bytes size, Tokens value, const Digest& merkleRoot) {
  return request(
      "file_add",
      [&] {
        Json p;
        p["client"] = client.value;
        p["size"] = size;
        p["value"] = value.units();
        p["merkleRoot"] = hex_digest(merkleRoot);
        return p;
      },
      [&] {
        const auto& params = state_.params;
        Tokens& bal = balance(client);
        if (value <= Tokens{} || value.units() % params.minValue.units() != 0)
          throw Error(Errc::ValueNotMultiple);
        if (size == 0) throw Error(Errc::PreconditionViolation, "empty file");
        if (size > params.sizeLimit) throw Error(Errc::FileTooLarge);
        const auto cp = static_cast<std::uint32_t>(params.k * (value.units() / params.minValue.units()));
        const Tokens perTransfer = traffic_fee(state_.fees, size);
        if (bal < perTransfer * cp) throw Error(Errc::InsufficientBalance, "traffic fee escrow");

        std::vector<SectorRef> targets;
        targets.reserve(cp);
        try {
          for (std::uint32_t i = 0; i < cp; ++i) {
            std::uint32_t attempts = 0;
            SectorRef s = random_sector(state_, rng_);
            ++attempts;
            while (state_.find_sector(s)->freeCap < size) {  // almost never happens
              ++stats_.collisions;
              if (attempts >= kMaxPlacementAttempts) throw Error(Errc::CollisionExhausted);
              s = random_sector(state_, rng_);
              ++attempts;
            }
            reserve_space(state_, s, size);
            targets.push_back(s);
          }
        } catch (const Error&) {
          for (const auto& s : targets) release_space(state_, s, size);
          throw;
        }

        const FileId id{++state_.lastFileId};
        FileRecord& rec = state_.files[id];
        rec.desc = FileDescriptor{id, size, value, merkleRoot, cp, -1, FileState::Normal, client};
        rec.entries.resize(cp);
        for (std::uint32_t i = 1; i <= cp; ++i) {
          const EntryKey key{id, i};
          set_next(state_, key, targets[i - 1]);
          rec.entries[i - 1].state = EntryState::Alloc;
          settle_traffic_fee(state_, key, client, targets[i - 1].owner, size);
          notify({NoticeKind::StoreRequest, targets[i - 1].owner, id, i, targets[i - 1], std::nullopt, {}});
        }
        schedule(state_.clock + transfer_delay(params, size), TaskKind::CheckAlloc, id);
        ++stats_.filesAdded;
        annotate("file", id.value);
        annotate("cp", cp);
        return id;
      });
}

void Engine::file_discard(AccountId client, FileId file) {
  request(
      "file_discard",
      [&] { return Json{{"client", client.value}, {"file", file.value}}; },
      [&] {
        FileRecord& rec = live_file(file);
        if (rec.desc.owner != client) throw Error(Errc::NotOwner);
        if (rec.desc.state != FileState::Normal) throw Error(Errc::BadState, "file is not normal");
        rec.desc.state = FileState::Discard;
      });
}

std::vector<SectorRef> Engine::file_get(AccountId client, FileId file) {
  return request(
      "file_get",
      [&] { return Json{{"client", client.value}, {"file", file.value}}; },
      [&] {
        balance(client);
        FileRecord& rec = live_file(file);
        if (rec.desc.state != FileState::Normal) throw Error(Errc::BadState, "file is not normal");
        std::vector<SectorRef> out;
        for (const auto& e : rec.entries) {
          if (e.prev && state_.find_sector(*e.prev)->live()) out.push_back(*e.prev);
        }
        if (out.empty()) throw Error(Errc::NoLiveReplica);
        Json refs = Json::array();
        for (const auto& s : out) refs.push_back(to_json(s));
        annotate("sectors", std::move(refs));
        return out;
      });
}

// --- provider requests ------------------------------------------------------

void Engine::file_confirm(AccountId provider, FileId file, std::uint32_t index, SectorRef sector) {
  request(
      "file_confirm",
      [&] {
        return Json{{"provider", provider.value}, {"file", file.value}, {"index", index}, {"sector", to_json(sector)}};
      },
      [&] {
        FileRecord& rec = live_file(file);
        if (index < 1 || index > rec.entries.size()) throw Error(Errc::PreconditionViolation, "index out of range");
        const Sector& s = sector_ref(sector);
        if (s.ref.owner != provider) throw Error(Errc::NotOwner);
        AllocEntry& e = rec.entries[index - 1];
        if (e.state != EntryState::Alloc) throw Error(Errc::BadState, "entry is not in alloc");
        if (e.next != sector) throw Error(Errc::WrongSector);
        if (!s.live()) throw Error(Errc::BadState, "sector is not live");
        e.state = EntryState::Confirm;
        stats_.trafficPaid += release_traffic_fee(state_, EntryKey{file, index});
      });
}

void Engine::file_prove(AccountId provider, FileId file, std::uint32_t index, SectorRef sector, Proof proof) {
  request(
      "file_prove",
      [&] {
        return Json{{"provider", provider.value}, {"file", file.value},      {"index", index},
                    {"sector", to_json(sector)},  {"t", proof.t},             {"valid", proof.valid}};
      },
      [&] {
        FileRecord& rec = live_file(file);
        if (index < 1 || index > rec.entries.size()) throw Error(Errc::PreconditionViolation, "index out of range");
        const Sector& s = sector_ref(sector);
        if (s.ref.owner != provider) throw Error(Errc::NotOwner);
        if (!s.live()) throw Error(Errc::WrongSector, "sector is " + std::string(to_string(s.state)));
        AllocEntry& e = rec.entries[index - 1];
        if (e.prev != sector) throw Error(Errc::WrongSector);
        if (!proof.valid || proof.t > state_.clock) throw Error(Errc::InvalidProof);
        e.last = proof.t;
      });
}

SectorRef Engine::sector_register(AccountId provider, Bytes capacity) {
  return request(
      "sector_register",
      [&] { return Json{{"provider", provider.value}, {"capacity", capacity}}; },
      [&] {
        Tokens& bal = balance(provider);
        const Tokens deposit = compute_deposit(capacity, state_.params);
        if (bal < deposit) throw Error(Errc::InsufficientFunds);
        bal -= deposit;
        const SectorRef ref{provider, ++state_.lastSectorId[provider]};
        Sector s;
        s.ref = ref;
        s.capacity = capacity;
        s.freeCap = capacity;
        s.deposit = deposit;
        s.registeredAt = state_.clock;
        refill_crs(s, state_.params.crSize);
        state_.sectors.push_back(std::move(s));
        state_.sectorIndex[ref] = state_.sectors.size() - 1;
        state_.normalCapacity.push_back(capacity);
        annotate("sector", to_json(ref));
        annotate("deposit", deposit.units());
        maintain_randomness_on_register(ref);
        return ref;
      });
}

void Engine::maintain_randomness_on_register(const SectorRef& ref) {
  std::vector<EntryKey> candidates;
  for (const auto& [id, rec] : state_.files) {
    if (rec.desc.state != FileState::Normal || !rec.stored) continue;
    for (std::uint32_t i = 1; i <= rec.entries.size(); ++i) {
      if (rec.entries[i - 1].state == EntryState::Normal) candidates.push_back({id, i});
    }
  }
  const Sector& s = *state_.find_sector(ref);
  const double mean = static_cast<double>(candidates.size()) * static_cast<double>(s.capacity) /
                      static_cast<double>(state_.normalCapacity.total());
  const std::uint64_t drawn = rng_.poisson(mean);
  const auto n = std::min<std::uint64_t>(drawn, candidates.size());
  annotate("swapIn", n);
  // Partial Fisher-Yates: the first n slots become a uniform n-subset.
  for (std::uint64_t j = 0; j < n; ++j) {
    const std::uint64_t pick = j + rng_.uniform_below(candidates.size() - j);
    std::swap(candidates[j], candidates[pick]);
    const EntryKey key = candidates[j];
    const FileRecord& rec = state_.files.at(key.file);
    if (state_.find_sector(ref)->freeCap < rec.desc.size) {
      ++stats_.collisions;
      continue;
    }
    start_relocation(key, ref);
  }
}

void Engine::sector_disable(AccountId provider, SectorRef sector) {
  request(
      "sector_disable",
      [&] { return Json{{"provider", provider.value}, {"sector", to_json(sector)}}; },
      [&] {
        Sector& s = sector_ref(sector);
        if (s.ref.owner != provider) throw Error(Errc::NotOwner);
        if (s.state != SectorState::Normal) throw Error(Errc::BadState, "sector is not normal");
        s.state = SectorState::Disabled;
        state_.normalCapacity.set(state_.sectorIndex.at(sector), 0);
        maybe_retire(sector);
      });
}

void Engine::maybe_retire(const SectorRef& ref) {
  Sector* s = state_.find_sector(ref);
  if (!s || s->state != SectorState::Disabled || !s->holding.empty() || !s->incoming.empty()) return;
  s->state = SectorState::Removed;
  const Tokens refund = s->deposit;
  s->deposit = Tokens{};
  balance(ref.owner) += refund;
  notify({NoticeKind::SectorRemoved, ref.owner, {}, 0, ref, std::nullopt, refund});
}

// --- adversary hooks --------------------------------------------------------

void Engine::corrupt_sectors(std::span<const SectorRef> sectors) {
  request(
      "corrupt",
      [&] {
        Json refs = Json::array();
        for (const auto& s : sectors) refs.push_back(to_json(s));
        return Json{{"sectors", std::move(refs)}};
      },
      [&] {
        for (const auto& ref : sectors) {
          const Sector& s = sector_ref(ref);
          if (!s.live()) throw Error(Errc::BadState, "sector " + to_string(ref) + " is not live");
        }
        std::vector<SectorRef> unique(sectors.begin(), sectors.end());
        std::sort(unique.begin(), unique.end());
        if (std::adjacent_find(unique.begin(), unique.end()) != unique.end())
          throw Error(Errc::BadState, "duplicate sector in corruption set");
        for (const auto& ref : unique) do_confiscate(ref);
      });
}

void Engine::settle_losses() {
  request(
      "settle_losses", [] { return Json::object(); },
      [&] {
        std::vector<FileId> lost;
        for (auto& [id, rec] : state_.files) {
          if (!rec.stored || (rec.desc.state != FileState::Normal && rec.desc.state != FileState::Discard)) continue;
          const bool alive = std::any_of(rec.entries.begin(), rec.entries.end(), [](const AllocEntry& e) { return e.prev.has_value(); });
          if (!alive) lost.push_back(id);
        }
        for (auto id : lost) declare_lost(state_.files.at(id));
        annotate("lost", lost.size());
      });
}

void Engine::do_confiscate(const SectorRef& ref) {
  const Confiscation c = confiscate(state_, ref);
  ++stats_.confiscations;
  stats_.confiscated += c.amount;
  notify({NoticeKind::SectorCorrupted, ref.owner, {}, 0, ref, std::nullopt, c.amount});
}

void Engine::do_penalize(const SectorRef& ref) {
  const Sector* s = state_.find_sector(ref);
  if (!s || !s->live()) return;  // corrupted sectors already lost their deposit
  const Tokens amount = penalize(state_, ref);
  ++stats_.penalties;
  stats_.penaltiesBurned += amount;
  notify({NoticeKind::Penalized, ref.owner, {}, 0, ref, std::nullopt, amount});
}

void Engine::declare_lost(FileRecord& rec) {
  const FileId id = rec.desc.id;
  const AccountId owner = rec.desc.owner;
  notify({NoticeKind::FileLost, owner, id, 0, std::nullopt, std::nullopt, rec.desc.value});
  const Compensation c = compensate(state_, id);
  stats_.compensationPaid += c.paid;
  notify({NoticeKind::Compensated, owner, id, 0, std::nullopt, std::nullopt, c.paid});
  if (c.shortfall > Tokens{}) {
    ++stats_.underCompensations;
    stats_.compensationShortfall += c.shortfall;
    notify({NoticeKind::UnderCompensated, owner, id, 0, std::nullopt, std::nullopt, c.shortfall});
  }
  ++stats_.filesLost;
  remove_file(id, FileState::Lost);
}

void Engine::remove_file(FileId id, FileState finalState) {
  FileRecord& rec = state_.files.at(id);
  std::vector<SectorRef> touched;
  for (std::uint32_t i = 1; i <= rec.entries.size(); ++i) {
    const EntryKey key{id, i};
    AllocEntry& e = rec.entries[i - 1];
    if (e.prev) {
      release_space(state_, *e.prev, rec.desc.size);
      touched.push_back(*e.prev);
      set_prev(state_, key, std::nullopt);
    }
    if (e.next) {
      release_space(state_, *e.next, rec.desc.size);
      touched.push_back(*e.next);
      set_next(state_, key, std::nullopt);
    }
    refund_traffic_fee(state_, key);
  }
  rec.entries.clear();
  rec.desc.state = finalState;
  notify({NoticeKind::FileRemoved, rec.desc.owner, id, 0, std::nullopt, std::nullopt, {}});
  if (!state_.keepTombstones) state_.files.erase(id);
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (const auto& s : touched) maybe_retire(s);
}

// --- scheduler --------------------------------------------------------------

void Engine::advance_time(Tick to) {
  if (to < state_.clock) throw Error(Errc::TimeReversal);
  const Tick period = state_.fees.periodLength;
  for (;;) {
    const Tick boundary = state_.lastRentBoundary + period;
    const bool haveTask = !state_.pending.empty() && state_.pending.begin()->time <= to;
    const bool haveBoundary = boundary <= to;
    if (haveTask && (!haveBoundary || state_.pending.begin()->time <= boundary)) {
      const PendingTask task = *state_.pending.begin();
      state_.pending.erase(state_.pending.begin());
      state_.clock = task.time;
      if (observer_) observer_->before_task(*this, task);
      run_task(task);
    } else if (haveBoundary) {
      state_.clock = boundary;
      distribute_period_rent(boundary);
    } else {
      break;
    }
  }
  state_.clock = to;
}

void Engine::distribute_period_rent(Tick boundary) {
  const Tick periodStart = state_.lastRentBoundary;
  state_.lastRentBoundary = boundary;
  if (state_.ledger.networkPool <= Tokens{}) return;
  open_event("distribute_rent");
  const auto payouts = distribute_rent(state_, periodStart);
  Json paid = Json::array();
  for (const auto& p : payouts) {
    stats_.rentDistributed += p.amount;
    notify({NoticeKind::RentPaid, p.provider, {}, 0, std::nullopt, std::nullopt, p.amount});
    if (options_.recordEvents) paid.push_back(Json::array({p.provider.value, p.amount.units()}));
  }
  annotate("periodStart", periodStart);
  annotate("payouts", std::move(paid));
  annotate("carried", state_.ledger.networkPool.units());
  close_event(nullptr);
}

void Engine::run_task(const PendingTask& task) {
  open_event(to_string(task.kind));
  if (options_.recordEvents) {
    current_->payload["file"] = task.file.value;
    if (task.kind == TaskKind::CheckRefresh) current_->payload["index"] = task.index;
  }
  const FileRecord* rec = state_.find_file(task.file);
  if (!rec || rec->desc.state == FileState::Removed || rec->desc.state == FileState::Lost) {
    annotate("stale", true);
  } else {
    switch (task.kind) {
      case TaskKind::CheckAlloc: auto_check_alloc(task.file); break;
      case TaskKind::CheckProof: auto_check_proof(task.file); break;
      case TaskKind::CheckRefresh: auto_check_refresh(task.file, task.index); break;
    }
  }
  close_event(nullptr);
}

// --- automatic tasks --------------------------------------------------------

void Engine::auto_check_alloc(FileId id) {
  FileRecord& rec = state_.files.at(id);
  assert(rec.desc.cp > 0);
  const bool failed = std::any_of(rec.entries.begin(), rec.entries.end(), [](const AllocEntry& e) {
    return e.state != EntryState::Confirm && e.state != EntryState::Corrupted;
  });
  if (failed) {
    ++stats_.uploadFailures;
    annotate("result", "failed");
    notify({NoticeKind::UploadFailed, rec.desc.owner, id, 0, std::nullopt, std::nullopt, {}});
    remove_file(id, FileState::Removed);
    return;
  }
  for (std::uint32_t i = 1; i <= rec.entries.size(); ++i) {
    const EntryKey key{id, i};
    AllocEntry& e = rec.entries[i - 1];
    if (e.state == EntryState::Confirm) {
      const SectorRef target = *e.next;
      set_next(state_, key, std::nullopt);
      set_prev(state_, key, target);
      e.last = state_.clock;
      e.state = EntryState::Normal;
    }
  }
  rec.stored = true;
  rec.desc.cntdown = sample_exp(rng_, state_.params.avgRefresh);
  schedule(state_.clock + state_.params.proofCycle, TaskKind::CheckProof, id);
  ++stats_.filesStored;
  annotate("result", "stored");
  annotate("cntdown", rec.desc.cntdown);
  notify({NoticeKind::UploadSucceeded, rec.desc.owner, id, 0, std::nullopt, std::nullopt, {}});
  if (rec.desc.state == FileState::Normal) {
    try {
      const CycleCharge c = charge_rent_and_gas(state_, id);
      stats_.rentCharged += c.rent;
      stats_.gasBurned += c.gas;
      annotate("charged", c.total().units());
    } catch (const Error& e) {
      if (e.code() != Errc::InsufficientBalance) throw;
      rec.desc.state = FileState::Discard;
      notify({NoticeKind::Discarded, rec.desc.owner, id, 0, std::nullopt, std::nullopt, {}});
    }
  }
}

void Engine::auto_check_proof(FileId id) {
  FileRecord& rec = state_.files.at(id);
  const auto& params = state_.params;
  if (rec.desc.state == FileState::Normal) {
    const Tokens cost = cycle_cost(state_.fees, params, rec.desc).total();
    if (balance(rec.desc.owner) < cost) {
      rec.desc.state = FileState::Discard;
      notify({NoticeKind::Discarded, rec.desc.owner, id, 0, std::nullopt, std::nullopt, cost});
    }
  }
  if (rec.desc.state == FileState::Normal) {
    const CycleCharge c = charge_rent_and_gas(state_, id);
    stats_.rentCharged += c.rent;
    stats_.gasBurned += c.gas;
    annotate("charged", c.total().units());
    for (auto& e : rec.entries) {
      if (!e.prev) continue;  // corrupted or restoring
      const Tick age = state_.clock - e.last.value_or(0);
      if (age > params.proofDeadline) {
        annotate("deadlineMissed", to_json(*e.prev));
        do_confiscate(*e.prev);
      } else if (age > params.proofDue) {
        do_penalize(*e.prev);
      }
    }
  }
  if (rec.desc.state == FileState::Discard) {
    ++stats_.filesDiscarded;
    annotate("result", "removed");
    remove_file(id, FileState::Removed);
    return;
  }
  const bool alive = std::any_of(rec.entries.begin(), rec.entries.end(), [](const AllocEntry& e) { return e.prev.has_value(); });
  if (!alive) {
    annotate("result", "lost");
    declare_lost(rec);
    return;
  }
  schedule(state_.clock + params.proofCycle, TaskKind::CheckProof, id);
  rec.desc.cntdown -= 1;
  annotate("cntdown", rec.desc.cntdown);
  if (rec.desc.cntdown == 0) auto_refresh(id, random_index(rng_, rec.desc.cp));
}

void Engine::auto_refresh(FileId id, std::uint32_t index) {
  FileRecord& rec = state_.files.at(id);
  const EntryKey key{id, index};
  AllocEntry& e = rec.entries[index - 1];
  annotate("refreshIndex", index);
  if (e.state == EntryState::Alloc || e.state == EntryState::Confirm) {
    rec.desc.cntdown = sample_exp(rng_, state_.params.avgRefresh);
    return;
  }
  std::optional<SectorRef> target;
  if (state_.normalCapacity.total() > 0) target = random_sector(state_, rng_);
  if (target && state_.find_sector(*target)->freeCap >= rec.desc.size) {
    start_relocation(key, *target);
  } else {  // almost never happens
    ++stats_.collisions;
    rec.desc.cntdown = sample_exp(rng_, state_.params.avgRefresh);
    notify({NoticeKind::Collision, rec.desc.owner, id, index, target, std::nullopt, {}});
  }
}

void Engine::start_relocation(const EntryKey& key, const SectorRef& target) {
  FileRecord& rec = state_.files.at(key.file);
  AllocEntry& e = rec.entries[key.index - 1];
  reserve_space(state_, target, rec.desc.size);
  set_next(state_, key, target);
  e.state = EntryState::Alloc;
  try {
    settle_traffic_fee(state_, key, rec.desc.owner, target.owner, rec.desc.size);
  } catch (const Error& err) {
    if (err.code() != Errc::InsufficientBalance) throw;
  }
  schedule(state_.clock + transfer_delay(state_.params, rec.desc.size), TaskKind::CheckRefresh, key.file, key.index);
  ++stats_.relocations;
  notify({NoticeKind::SwapRequest, target.owner, key.file, key.index, target, e.prev, {}});
}

void Engine::auto_check_refresh(FileId id, std::uint32_t index) {
  FileRecord& rec = state_.files.at(id);
  const EntryKey key{id, index};
  AllocEntry& e = rec.entries[index - 1];
  if (e.state != EntryState::Alloc && e.state != EntryState::Confirm) {
    annotate("stale", true);
    return;
  }
  const SectorRef target = *e.next;
  const Sector& next = *state_.find_sector(target);
  if (e.state == EntryState::Confirm && next.live()) {
    const std::optional<SectorRef> old = e.prev;
    if (old) release_space(state_, *old, rec.desc.size);
    set_next(state_, key, std::nullopt);
    set_prev(state_, key, target);
    e.last = state_.clock;
    e.state = EntryState::Normal;
    rec.desc.cntdown = sample_exp(rng_, state_.params.avgRefresh);
    ++stats_.refreshConfirmed;
    annotate("result", "confirmed");
    if (old) maybe_retire(*old);
    return;
  }
  ++stats_.refreshFailed;
  annotate("result", "failed");
  do_penalize(target);
  for (const auto& other : rec.entries) {
    if (other.prev) do_penalize(*other.prev);
  }
  release_space(state_, target, rec.desc.size);
  set_next(state_, key, std::nullopt);
  refund_traffic_fee(state_, key);
  if (e.prev) {
    e.state = EntryState::Normal;
  } else {
    e.state = EntryState::Corrupted;
    e.last.reset();
  }
  maybe_retire(target);
  auto_refresh(id, index);
}

}  // namespace fileinsurer
