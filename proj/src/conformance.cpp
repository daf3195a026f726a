#include "fileinsurer/behavior.hpp"
#include "fileinsurer/checks.hpp"
#include "fileinsurer/economics.hpp"

#include <algorithm>
#include <functional>
#include <memory>

namespace fileinsurer {

namespace {

NetworkParams rig_params() {
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

FeeSchedule rig_fees() {
  FeeSchedule f;
  f.rentPerByteReplicaCycle = 1e-6;
  f.gas = {0.001, 0.001, 0.002, 0.002};
  f.trafficPerByte = 1e-6;
  f.periodLength = 50;
  return f;
}

// Client is account 0, providers 1..n.
struct Rig {
  Rig(const NetworkParams& p, const FeeSchedule& f, std::uint32_t providers, Tokens clientBalance,
      std::uint64_t seed = 1) {
    std::map<AccountId, Tokens> balances{{AccountId{0}, clientBalance}};
    for (std::uint32_t i = 1; i <= providers; ++i) balances[AccountId{i}] = Tokens::whole(1000);
    EngineOptions o;
    o.testMode = true;
    engine = std::make_unique<Engine>(init_network(p, f, balances), seed, o);
    engine->set_observer(&behaviors);
  }

  Engine& e() { return *engine; }
  const NetworkState& st() const { return engine->state(); }
  Tokens bal(std::uint32_t a) const { return st().ledger.accounts.at(AccountId{a}); }
  const FileRecord& file(FileId id) const { return *st().find_file(id); }
  const Sector& sector(SectorRef s) const { return *st().find_sector(s); }

  std::size_t notices(NoticeKind k) const {
    std::size_t n = 0;
    for (const auto& ev : engine->events()) {
      for (const auto& x : ev.notices) n += x.kind == k;
    }
    return n;
  }

  ProviderBehaviors behaviors;
  std::unique_ptr<Engine> engine;
  const AccountId client{0};
};

struct Expect {
  std::vector<std::string>& out;
  void operator()(bool cond, const std::string& what) const {
    if (!cond) out.push_back(what);
  }
  template <typename Fn>
  void error(Errc code, Fn&& fn, const std::string& what) const {
    try {
      fn();
      out.push_back(what + ": accepted");
    } catch (const Error& e) {
      if (e.code() != code) out.push_back(what + ": got " + std::string(to_string(e.code())));
    }
  }
};

void finish(Rig& rig, const Expect& expect) {
  expect(find_violations(rig.st()).empty(), "invariant violation at end");
  expect(circulating_total(rig.st()) == rig.st().ledger.minted, "token conservation");
}

Behavior beh(BehaviorKind k, std::uint32_t every = 1) { return Behavior{k, every}; }

void upload_success(const Expect& expect) {
  Rig rig(rig_params(), rig_fees(), 2, Tokens::whole(10));
  rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().sector_register(AccountId{2}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  // Honest providers confirm as soon as the store requests are delivered.
  expect(rig.file(f).desc.cp == 2 && rig.file(f).entries[0].state == EntryState::Confirm, "two confirmed entries");
  rig.e().advance_time(1);
  const auto& rec = rig.file(f);
  expect(rec.stored, "stored");
  for (const auto& en : rec.entries) expect(en.state == EntryState::Normal && en.last == Tick{1}, "entry normal");
  expect(rig.notices(NoticeKind::UploadSucceeded) == 1, "upload notice");
  expect(rec.desc.cntdown >= 1, "cntdown sampled");
  expect(rig.st().pending.size() == 1 && rig.st().pending.begin()->kind == TaskKind::CheckProof &&
             rig.st().pending.begin()->time == 11,
         "CheckProof scheduled one cycle later");
  expect(rig.e().stats().trafficPaid == traffic_fee(rig.st().fees, 1024) * 2, "traffic escrow released");
  expect(rig.st().ledger.escrowPool == Tokens{}, "no escrow left");
  expect(rig.e().stats().rentCharged == Tokens::from_tokens(1e-6 * 1024 * 2), "first cycle rent prepaid");
  finish(rig, expect);
}

void upload_failure(const Expect& expect) {
  Rig rig(rig_params(), rig_fees(), 1, Tokens::whole(10));
  rig.behaviors.set(AccountId{1}, beh(BehaviorKind::Silent));
  const SectorRef s = rig.e().sector_register(AccountId{1}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  expect(rig.sector(s).freeCap == 62 * 1024, "space reserved at allocation");
  rig.e().advance_time(1);
  expect(rig.file(f).desc.state == FileState::Removed, "file removed");
  expect(rig.notices(NoticeKind::UploadFailed) == 1, "failure notice");
  expect(rig.sector(s).freeCap == 64 * 1024 && rig.sector(s).crCount == 64, "space released, CRs refilled");
  expect(rig.bal(0) == Tokens::whole(10), "escrow refunded, nothing charged");
  finish(rig, expect);
}

void proof_fresh(const Expect& expect) {
  Rig rig(rig_params(), rig_fees(), 2, Tokens::whole(10));
  rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().sector_register(AccountId{2}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(1);
  const Tokens b0 = rig.bal(0);
  const auto c0 = rig.file(f).desc.cntdown;
  rig.e().advance_time(11);
  const Tokens cost = cycle_cost(rig.st().fees, rig.st().params, rig.file(f).desc).total();
  expect(rig.bal(0) == b0 - cost, "one cycle charged");
  expect(rig.file(f).desc.cntdown == c0 - 1, "cntdown decremented");
  expect(rig.e().stats().penalties == 0, "no penalty");
  expect(rig.st().pending.begin()->time == 21, "rescheduled");
  finish(rig, expect);
}

void proof_stale(const Expect& expect) {
  Rig rig(rig_params(), rig_fees(), 1, Tokens::whole(10));
  rig.behaviors.set(AccountId{1}, beh(BehaviorKind::ProveEvery, 4));
  const SectorRef s = rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(200);
  expect(rig.e().stats().penalties > 0, "late proofs penalized");
  expect(rig.e().stats().confiscations == 0, "no confiscation before the deadline");
  expect(rig.sector(s).deposit < deposit_formula(64 * 1024, rig.st().params), "deposit reduced");
  expect(rig.sector(s).state == SectorState::Normal, "sector stays normal");
  finish(rig, expect);
}

void proof_deadline(const Expect& expect, bool underfunded) {
  NetworkParams p = rig_params();
  if (underfunded) p.gammaDeposit = 0.01;
  Rig rig(p, rig_fees(), 1, Tokens::whole(10));
  rig.behaviors.set(AccountId{1}, beh(BehaviorKind::NoProve));
  const SectorRef s = rig.e().sector_register(AccountId{1}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(61);
  expect(rig.e().stats().penalties > 0 && rig.e().stats().confiscations == 0, "penalized before the deadline");
  const Tokens before = rig.bal(0);
  rig.e().advance_time(71);
  expect(rig.sector(s).state == SectorState::Corrupted && rig.sector(s).deposit == Tokens{}, "sector confiscated");
  expect(rig.file(f).desc.state == FileState::Lost, "file lost");
  expect(rig.notices(NoticeKind::FileLost) == 1, "loss notice");
  const auto& stats = rig.e().stats();
  if (underfunded) {
    expect(stats.underCompensations == 1 && rig.notices(NoticeKind::UnderCompensated) == 1, "shortfall recorded");
    expect(stats.compensationPaid + stats.compensationShortfall == Tokens::whole(1), "paid + shortfall = value");
    expect(rig.st().ledger.confiscatedPool == Tokens{}, "pool drained");
  } else {
    expect(stats.underCompensations == 0, "fully compensated");
    // The same CheckProof first charges the cycle, then settles the loss.
    const Tokens cost = cycle_cost(rig.st().fees, rig.st().params, rig.file(f).desc).total();
    expect(rig.bal(0) == before - cost + Tokens::whole(1), "owner receives the file value");
  }
  finish(rig, expect);
}

void refresh_success(const Expect& expect) {
  NetworkParams p = rig_params();
  p.avgRefresh = 2;
  Rig rig(p, rig_fees(), 3, Tokens::whole(10));
  for (std::uint32_t i = 1; i <= 3; ++i) rig.e().sector_register(AccountId{i}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(2));
  rig.e().advance_time(300);
  expect(rig.e().stats().refreshConfirmed > 0, "refresh confirmed");
  expect(rig.e().stats().refreshFailed == 0 && rig.e().stats().penalties == 0, "no penalties");
  std::size_t live = 0;
  for (const auto& en : rig.file(f).entries) live += en.prev.has_value();
  expect(live == 4, "all replicas live");
  finish(rig, expect);
}

void refresh_collision(const Expect& expect) {
  NetworkParams p = rig_params();
  p.k = 1;
  p.avgRefresh = 1;
  Rig rig(p, rig_fees(), 2, Tokens::whole(10));
  rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().sector_register(AccountId{2}, 64 * 1024);
  rig.e().file_add(rig.client, 48 * 1024, Tokens::whole(1));
  rig.e().file_add(rig.client, 48 * 1024, Tokens::whole(1));
  const auto afterUpload = rig.e().stats().collisions;
  rig.e().advance_time(200);
  expect(rig.e().stats().collisions > afterUpload, "refresh collided");
  expect(rig.e().stats().relocations == 0, "no relocation started");
  expect(rig.notices(NoticeKind::Collision) > 0, "collision notice");
  finish(rig, expect);
}

void refresh_self(const Expect& expect) {
  NetworkParams p = rig_params();
  p.avgRefresh = 1;
  Rig rig(p, rig_fees(), 1, Tokens::whole(10));
  const SectorRef s = rig.e().sector_register(AccountId{1}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(100);
  expect(rig.e().stats().refreshConfirmed > 0, "self relocation confirmed");
  for (const auto& en : rig.file(f).entries)
    expect(en.prev == s && (en.state == EntryState::Normal || en.next == s), "replica stays on the sector");
  finish(rig, expect);
}

void refresh_failed_confirm(const Expect& expect) {
  NetworkParams p = rig_params();
  p.avgRefresh = 1;
  Rig rig(p, rig_fees(), 2, Tokens::whole(10));
  rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().sector_register(AccountId{2}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(1);
  rig.behaviors.set(AccountId{1}, beh(BehaviorKind::NoConfirm));
  rig.behaviors.set(AccountId{2}, beh(BehaviorKind::NoConfirm));
  Tick t = 1;
  while (rig.e().stats().refreshFailed == 0 && t < 500) rig.e().advance_time(++t);
  const auto& stats = rig.e().stats();
  expect(stats.refreshFailed > 0, "refresh failed");
  const auto cp = rig.file(f).desc.cp;
  expect(stats.penalties == stats.refreshFailed * (cp + 1), "cp+1 penalties per failed refresh");
  bool retried = false;
  for (const auto& en : rig.file(f).entries) retried = retried || en.state == EntryState::Alloc;
  expect(retried || stats.collisions > 0, "refresh re-issued");
  expect(rig.st().ledger.escrowPool <= traffic_fee(rig.st().fees, 1024) * cp, "failed escrow refunded");
  finish(rig, expect);
}

void refresh_failed_corrupted_prev(const Expect& expect) {
  NetworkParams p = rig_params();
  p.k = 3;
  p.avgRefresh = 1;
  Rig rig(p, rig_fees(), 3, Tokens::whole(10), 5);
  for (std::uint32_t i = 1; i <= 3; ++i) rig.e().sector_register(AccountId{i}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(1);
  // Corrupt one holder, then let every transfer go unconfirmed.
  const SectorRef victim = *rig.file(f).entries[0].prev;
  const SectorRef targets[] = {victim};
  rig.e().corrupt_sectors(targets);
  for (std::uint32_t i = 1; i <= 3; ++i) rig.behaviors.set(AccountId{i}, beh(BehaviorKind::NoConfirm));
  Tick t = 1;
  while (rig.e().stats().refreshFailed == 0 && t < 500) rig.e().advance_time(++t);
  expect(rig.e().stats().refreshFailed > 0, "refresh failed");
  expect(rig.sector(victim).penaltyCount == 0, "corrupted sector skipped");
  finish(rig, expect);
}

void disable_and_drain(const Expect& expect) {
  NetworkParams p = rig_params();
  p.k = 1;
  p.avgRefresh = 1;
  Rig rig(p, rig_fees(), 2, Tokens::whole(10));
  // Empty sector: removed at once.
  const SectorRef empty = rig.e().sector_register(AccountId{2}, 64 * 1024);
  const Tokens b2 = rig.bal(2);
  rig.e().sector_disable(AccountId{2}, empty);
  expect(rig.sector(empty).state == SectorState::Removed, "empty sector removed");
  expect(rig.bal(2) == b2 + deposit_formula(64 * 1024, p), "deposit refunded");
  expect.error(Errc::BadState, [&] { rig.e().sector_disable(AccountId{2}, empty); }, "disable twice");

  const SectorRef a = rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(1);
  const SectorRef b = rig.e().sector_register(AccountId{2}, 64 * 1024);
  expect.error(Errc::NotOwner, [&] { rig.e().sector_disable(AccountId{2}, a); }, "foreign disable");
  rig.e().sector_disable(AccountId{1}, a);
  expect(rig.sector(a).state == SectorState::Disabled, "holding sector only disabled");
  Tick t = 1;
  while (rig.sector(a).state != SectorState::Removed && t < 1000) rig.e().advance_time(t += 10);
  expect(rig.sector(a).state == SectorState::Removed, "drained sector removed");
  expect(rig.sector(b).holding.size() == 1, "replica moved to the other sector");
  bool afterRefresh = false;
  for (const auto& ev : rig.e().events()) {
    for (const auto& n : ev.notices)
      afterRefresh = afterRefresh || (n.kind == NoticeKind::SectorRemoved && n.sector == a && ev.kind == "CheckRefresh");
  }
  expect(afterRefresh, "removal follows a confirmed CheckRefresh");
  finish(rig, expect);
}

void insufficient_balance(const Expect& expect) {
  const FeeSchedule fees = rig_fees();
  NetworkParams p = rig_params();
  FileDescriptor d;
  d.size = 1024;
  d.cp = 2;
  const Tokens cycle = cycle_cost(fees, p, d).total();
  const Tokens start = traffic_fee(fees, 1024) * 2 + cycle * 3 + Tokens::from_units(1);
  Rig rig(p, fees, 2, start);
  rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().sector_register(AccountId{2}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(100);
  expect(rig.notices(NoticeKind::Discarded) == 1, "discarded for insufficient cost");
  expect(rig.file(f).desc.state == FileState::Removed, "file removed");
  expect(rig.e().stats().rentCharged == Tokens::from_tokens(1e-6 * 1024 * 2) * 3, "three cycles charged");
  expect(rig.bal(0) == Tokens::from_units(1), "no overdraft");
  finish(rig, expect);
}

void client_discard(const Expect& expect) {
  Rig rig(rig_params(), rig_fees(), 2, Tokens::whole(10));
  const SectorRef s1 = rig.e().sector_register(AccountId{1}, 64 * 1024);
  const SectorRef s2 = rig.e().sector_register(AccountId{2}, 64 * 1024);
  const FileId f = rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(1);
  expect.error(Errc::NotOwner, [&] { rig.e().file_discard(AccountId{1}, f); }, "foreign discard");
  rig.e().file_discard(rig.client, f);
  expect.error(Errc::BadState, [&] { rig.e().file_discard(rig.client, f); }, "discard twice");
  expect(rig.file(f).desc.state == FileState::Discard, "marked discard");
  rig.e().advance_time(11);
  expect(rig.file(f).desc.state == FileState::Removed, "removed at next CheckProof");
  expect(rig.sector(s1).freeCap == 64 * 1024 && rig.sector(s2).freeCap == 64 * 1024, "space released");
  finish(rig, expect);
}

void register_swap_in(const Expect& expect) {
  Rig rig(rig_params(), rig_fees(), 3, Tokens::whole(10));
  for (std::uint32_t i = 1; i <= 3; ++i) rig.e().sector_register(AccountId{i}, 64 * 1024);
  for (int i = 0; i < 50; ++i) rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(1);
  const SectorRef fresh = rig.e().sector_register(AccountId{1}, 64 * 1024);
  const auto& events = rig.e().events();
  const auto& ev = *std::find_if(events.rbegin(), events.rend(), [](const EngineEvent& x) { return x.kind == "sector_register"; });
  expect(ev.kind == "sector_register" && ev.payload.value("swapIn", 0) > 0, "Poisson swap-in drawn");
  std::size_t swaps = 0;
  for (const auto& n : ev.notices) swaps += n.kind == NoticeKind::SwapRequest && n.sector == fresh;
  expect(swaps > 0 && swaps == rig.sector(fresh).incoming.size(), "entries relocating to the new sector");
  rig.e().advance_time(5);
  expect(rig.sector(fresh).holding.size() == swaps, "swaps confirmed");
  finish(rig, expect);
}

void rent_distribution(const Expect& expect) {
  Rig rig(rig_params(), rig_fees(), 2, Tokens::whole(10));
  rig.e().sector_register(AccountId{1}, 64 * 1024);
  rig.e().sector_register(AccountId{2}, 3 * 64 * 1024);
  rig.e().file_add(rig.client, 1024, Tokens::whole(1));
  rig.e().advance_time(1);
  const Tokens pool = rig.st().ledger.networkPool;
  const Tokens b1 = rig.bal(1), b2 = rig.bal(2);
  rig.e().advance_time(50);
  const Tokens p1 = rig.bal(1) - b1, p2 = rig.bal(2) - b2;
  expect(rig.notices(NoticeKind::RentPaid) == 2, "both providers paid");
  expect(pool > Tokens{} && (p1 + p2) <= pool + rig.e().stats().rentCharged, "never minted");
  expect(p2.units() - 3 * p1.units() <= 3 && 3 * p1.units() - p2.units() <= 3, "split 1:3 by capacity");
  finish(rig, expect);
}

void rejections(const Expect& expect) {
  NetworkParams p = rig_params();
  p.k = 1;
  Rig rig(p, rig_fees(), 2, Tokens::whole(10));
  expect.error(Errc::NoSectors, [&] { rig.e().file_add(rig.client, 1024, Tokens::whole(1)); }, "no sectors");
  expect.error(Errc::BadCapacity, [&] { rig.e().sector_register(AccountId{1}, 1000); }, "bad capacity");
  const SectorRef s1 = rig.e().sector_register(AccountId{1}, 64 * 1024);
  expect.error(Errc::ValueNotMultiple, [&] { rig.e().file_add(rig.client, 1024, Tokens::from_tokens(1.5)); },
               "fractional value");
  expect.error(Errc::FileTooLarge, [&] { rig.e().file_add(rig.client, 65 * 1024, Tokens::whole(1)); }, "too large");
  const FileId f = rig.e().file_add(rig.client, 48 * 1024, Tokens::whole(1));
  expect.error(Errc::CollisionExhausted, [&] { rig.e().file_add(rig.client, 48 * 1024, Tokens::whole(1)); },
               "forced collision");
  expect(rig.st().files.size() == 1 && rig.sector(s1).freeCap == 16 * 1024, "rolled back");
  rig.e().advance_time(48);
  expect(rig.file(f).stored, "stored");
  expect.error(Errc::BadState, [&] { rig.e().file_confirm(AccountId{1}, f, 1, s1); }, "confirm normal entry");
  expect.error(Errc::InvalidProof, [&] { rig.e().file_prove(AccountId{1}, f, 1, s1, Proof{49, true}); }, "future proof");
  expect.error(Errc::InvalidProof, [&] { rig.e().file_prove(AccountId{1}, f, 1, s1, Proof{48, false}); }, "bad proof");
  expect.error(Errc::NotOwner, [&] { rig.e().file_prove(AccountId{2}, f, 1, s1, Proof{48, true}); }, "foreign prove");
  expect.error(Errc::InsufficientFunds, [&] { rig.e().sector_register(AccountId{2}, 64 * 1024 * 1024); }, "deposit");
  expect.error(Errc::TimeReversal, [&] { rig.e().advance_time(10); }, "time reversal");
  const SectorRef targets[] = {s1};
  rig.e().corrupt_sectors(targets);
  expect.error(Errc::WrongSector, [&] { rig.e().file_prove(AccountId{1}, f, 1, s1, Proof{48, true}); },
               "prove on corrupted sector");
  expect.error(Errc::BadState, [&] { rig.e().corrupt_sectors(targets); }, "double confiscation");
  expect.error(Errc::NoLiveReplica, [&] { rig.e().file_get(rig.client, f); }, "no live replica");
  std::size_t rejected = 0;
  for (const auto& ev : rig.e().events()) rejected += ev.rejected.has_value();
  expect(rejected == 13, "every rejected request logged");
  finish(rig, expect);
}

}  // namespace

std::vector<BranchOutcome> run_conformance_branches() {
  const std::vector<std::pair<std::string, std::function<void(const Expect&)>>> branches = {
      {"upload success", upload_success},
      {"upload failure", upload_failure},
      {"proof fresh", proof_fresh},
      {"proof stale", proof_stale},
      {"proof deadline", [](const Expect& e) { proof_deadline(e, false); }},
      {"under-compensation", [](const Expect& e) { proof_deadline(e, true); }},
      {"refresh success", refresh_success},
      {"refresh to own sector", refresh_self},
      {"refresh collision", refresh_collision},
      {"refresh failed confirm", refresh_failed_confirm},
      {"failed refresh skips corrupted", refresh_failed_corrupted_prev},
      {"disable and drain", disable_and_drain},
      {"insufficient-balance discard", insufficient_balance},
      {"client discard", client_discard},
      {"register swap-in", register_swap_in},
      {"rent distribution", rent_distribution},
      {"rejections", rejections},
  };
  std::vector<BranchOutcome> out;
  for (const auto& [name, fn] : branches) {
    BranchOutcome o;
    o.branch = name;
    try {
      fn(Expect{o.failures});
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace fileinsurer
