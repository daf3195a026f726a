#pragma once

#include "fileinsurer/params.hpp"
#include "fileinsurer/types.hpp"
#include "fileinsurer/weighted_sampler.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fileinsurer {

using Json = nlohmann::ordered_json;

enum class SectorState { Normal, Disabled, Corrupted, Removed };
enum class FileState { Normal, Discard, Removed, Lost };
enum class EntryState { Alloc, Confirm, Normal, Corrupted };
enum class TaskKind { CheckAlloc, CheckProof, CheckRefresh };

std::string_view to_string(SectorState s);
std::string_view to_string(FileState s);
std::string_view to_string(EntryState s);
std::string_view to_string(TaskKind k);

struct Sector {
  SectorRef ref;
  Bytes capacity = 0;
  Bytes freeCap = 0;
  std::uint64_t crCount = 0;
  Tokens deposit;
  SectorState state = SectorState::Normal;
  Tick registeredAt = 0;
  std::uint32_t penaltyCount = 0;
  /// Entries whose prev is this sector (replicas stored here).
  std::set<EntryKey> holding;
  /// Entries whose next is this sector (replicas being transferred in).
  std::set<EntryKey> incoming;

  bool live() const { return state == SectorState::Normal || state == SectorState::Disabled; }
};

/// Bytes of a sector not covered by files or Capacity Replicas.
Bytes unsealed_space(const Sector& s, Bytes crSize);

/// Regenerate Capacity Replicas so that the unsealed space is below one CR.
void refill_crs(Sector& s, Bytes crSize);

struct FileDescriptor {
  FileId id;
  Bytes size = 0;
  Tokens value;
  Digest merkleRoot{};
  std::uint32_t cp = 0;
  std::int64_t cntdown = -1;
  FileState state = FileState::Normal;
  AccountId owner;
};

struct AllocEntry {
  std::optional<SectorRef> prev;
  std::optional<SectorRef> next;
  std::optional<Tick> last;
  EntryState state = EntryState::Alloc;
};

struct FileRecord {
  FileDescriptor desc;
  /// entries[i - 1] is allocTable[f, i].
  std::vector<AllocEntry> entries;
  /// Set once Auto_CheckAlloc accepted the upload.
  bool stored = false;
};

struct PendingTask {
  Tick time = 0;
  std::uint64_t seq = 0;
  TaskKind kind = TaskKind::CheckAlloc;
  FileId file;
  std::uint32_t index = 0;

  bool operator<(const PendingTask& o) const {
    return time != o.time ? time < o.time : seq < o.seq;
  }
};

struct Escrow {
  AccountId payer;
  AccountId provider;
  Tokens amount;
};

struct Ledger {
  std::map<AccountId, Tokens> accounts;
  Tokens networkPool;
  Tokens burnSink;
  Tokens confiscatedPool;
  Tokens escrowPool;
  /// Total ever minted; the conservation target.
  Tokens minted;
  std::map<EntryKey, Escrow> escrows;
};

struct NetworkState {
  NetworkParams params;
  FeeSchedule fees;
  Tick clock = 0;
  /// Dense, registration-ordered; index stable for the lifetime of the state.
  std::vector<Sector> sectors;
  std::map<SectorRef, std::size_t> sectorIndex;
  std::map<AccountId, std::uint32_t> lastSectorId;
  /// Capacity weights of normal sectors, aligned with `sectors`.
  WeightedSampler<Bytes> normalCapacity;
  std::map<FileId, FileRecord> files;
  std::uint64_t lastFileId = 0;
  std::set<PendingTask> pending;
  std::uint64_t nextTaskSeq = 0;
  Ledger ledger;
  Tick lastRentBoundary = 0;
  bool keepTombstones = true;

  Sector* find_sector(const SectorRef& ref);
  const Sector* find_sector(const SectorRef& ref) const;
  FileRecord* find_file(FileId id);
  const FileRecord* find_file(FileId id) const;
  AllocEntry& entry(const EntryKey& key);
  const AllocEntry& entry(const EntryKey& key) const;
};

/// Empty network with the given accounts minted.
NetworkState init_network(const NetworkParams& params, const FeeSchedule& fees,
                          const std::map<AccountId, Tokens>& initialBalances);

/// Allocation-table maintenance. These keep the per-sector reverse indexes
/// and freeCap/CR accounting in sync; space changes on dead sectors are
/// ignored.
void reserve_space(NetworkState& state, const SectorRef& sector, Bytes bytes);
void release_space(NetworkState& state, const SectorRef& sector, Bytes bytes);
void set_prev(NetworkState& state, const EntryKey& key, std::optional<SectorRef> sector);
void set_next(NetworkState& state, const EntryKey& key, std::optional<SectorRef> sector);

/// Deposit a sector of the given capacity must pledge.
Tokens deposit_formula(Bytes capacity, const NetworkParams& params);

/// Σ balances + pools + escrow + live sector deposits.
Tokens circulating_total(const NetworkState& state);

/// Every violated state invariant, one message each; empty when consistent.
std::vector<std::string> find_violations(const NetworkState& state);

/// Throws Error(InvariantViolation) with the first violation.
void validate_state(const NetworkState& state);

/// Canonical JSON: sectors by (owner, id), files by id, pending list in
/// execution order.
Json snapshot_json(const NetworkState& state);

Json to_json(const SectorRef& s);
std::string hex_digest(const Digest& d);

}  // namespace fileinsurer
