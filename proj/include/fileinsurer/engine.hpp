#pragma once

#include "fileinsurer/economics.hpp"
#include "fileinsurer/error.hpp"
#include "fileinsurer/rng.hpp"
#include "fileinsurer/state.hpp"

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fileinsurer {

/// Resample budget per replica index in File_Add.
inline constexpr std::uint32_t kMaxPlacementAttempts = 1000;

enum class NoticeKind {
  StoreRequest,      // upload of replica `index` expected at `sector`
  SwapRequest,       // replica `index` should move from `from` to `sector`
  UploadSucceeded,
  UploadFailed,
  Discarded,         // insufficient balance for the next cycle
  FileRemoved,
  FileLost,
  Compensated,
  UnderCompensated,
  SectorCorrupted,
  Penalized,
  SectorRemoved,
  Collision,
  RentPaid,
};

std::string_view to_string(NoticeKind k);

struct Notice {
  NoticeKind kind = NoticeKind::StoreRequest;
  AccountId to;
  FileId file;
  std::uint32_t index = 0;
  std::optional<SectorRef> sector;
  std::optional<SectorRef> from;
  Tokens amount;
};

Json to_json(const Notice& n);

struct EngineEvent {
  std::uint64_t seq = 0;
  Tick time = 0;
  std::string kind;
  Json payload = Json::object();
  std::optional<Errc> rejected;
  std::string reason;
  std::vector<Notice> notices;
};

/// {seq, time, kind, payload, outcome} in that order.
Json to_json(const EngineEvent& e);

struct EngineStats {
  std::uint64_t filesAdded = 0;
  std::uint64_t filesStored = 0;
  std::uint64_t uploadFailures = 0;
  std::uint64_t filesDiscarded = 0;
  std::uint64_t filesLost = 0;
  std::uint64_t collisions = 0;
  std::uint64_t relocations = 0;
  std::uint64_t refreshConfirmed = 0;
  std::uint64_t refreshFailed = 0;
  std::uint64_t penalties = 0;
  std::uint64_t confiscations = 0;
  std::uint64_t underCompensations = 0;
  Tokens rentCharged;
  Tokens gasBurned;
  Tokens penaltiesBurned;
  Tokens confiscated;
  Tokens compensationPaid;
  Tokens compensationShortfall;
  Tokens trafficPaid;
  Tokens rentDistributed;
};

Json to_json(const EngineStats& s);

struct EngineOptions {
  /// Run the global validator after every event.
  bool testMode = false;
  /// Keep the in-memory event log.
  bool recordEvents = true;
  /// Retain removed files in the state.
  bool keepTombstones = true;
};

class Engine;

/// Provider/client behavior hooked into the event loop. Requests issued from
/// these callbacks execute at the current clock.
class EngineObserver {
 public:
  virtual ~EngineObserver() = default;
  virtual void before_task(Engine&, const PendingTask&) {}
  virtual void on_notice(Engine&, const Notice&) {}
};

struct Proof {
  Tick t = 0;
  bool valid = true;
};

/// Capacity-proportional draw over normal sectors. Throws NoSectors.
SectorRef random_sector(const NetworkState& state, RngStream& rng);
/// ceil(Exp(mean)), at least 1.
std::int64_t sample_exp(RngStream& rng, double mean);
/// Uniform index in [1, cp]. Throws PreconditionViolation when cp == 0.
std::uint32_t random_index(RngStream& rng, std::uint32_t cp);

/// ceil(DelayPerSize * size), at least one tick.
Tick transfer_delay(const NetworkParams& params, Bytes size);

struct SegmentPlan {
  std::uint32_t segments = 0;
  std::uint32_t recoveryThreshold = 0;
  std::vector<FileDescriptor> descriptors;
};

/// Splits a file above sizeLimit into an even number of equal segments, any
/// half of which recover it; each segment carries 2 * value / m rounded up to
/// a multiple of minValue. Throws NotLarge.
SegmentPlan split_large_file(const FileDescriptor& descriptor, const NetworkParams& params);

/// The single-writer protocol state machine: request handlers, automatic
/// tasks and the clock.
class Engine {
 public:
  Engine(NetworkState state, std::uint64_t seed, EngineOptions options = {});

  const NetworkState& state() const { return state_; }
  const EngineStats& stats() const { return stats_; }
  const std::vector<EngineEvent>& events() const { return events_; }
  RngStream& rng() { return rng_; }
  const EngineOptions& options() const { return options_; }
  void set_observer(EngineObserver* observer) { observer_ = observer; }

  // Client requests.
  FileId file_add(AccountId client, Bytes size, Tokens value, const Digest& merkleRoot = {});
  void file_discard(AccountId client, FileId file);
  std::vector<SectorRef> file_get(AccountId client, FileId file);

  // Provider requests.
  void file_confirm(AccountId provider, FileId file, std::uint32_t index, SectorRef sector);
  void file_prove(AccountId provider, FileId file, std::uint32_t index, SectorRef sector, Proof proof);
  SectorRef sector_register(AccountId provider, Bytes capacity);
  void sector_disable(AccountId provider, SectorRef sector);

  // Adversary hooks.
  void corrupt_sectors(std::span<const SectorRef> sectors);
  /// Declares every stored file without a live replica lost and compensates
  /// it now instead of at its next CheckProof.
  void settle_losses();

  /// Executes due tasks in (time, seq) order; clock ends at `to`.
  void advance_time(Tick to);

  /// Appends a bookkeeping event (e.g. scenario markers).
  void note(std::string_view kind, Json payload);

 private:
  template <typename PayloadFn, typename Body>
  auto request(std::string_view kind, PayloadFn&& payload, Body&& body);

  void open_event(std::string_view kind);
  void close_event(const Error* rejected);
  void notify(Notice n);
  void flush_notices();
  void annotate(const char* key, Json value);

  void schedule(Tick at, TaskKind kind, FileId file, std::uint32_t index = 0);
  void run_task(const PendingTask& task);

  void auto_check_alloc(FileId file);
  void auto_check_proof(FileId file);
  void auto_refresh(FileId file, std::uint32_t index);
  void auto_check_refresh(FileId file, std::uint32_t index);
  void maintain_randomness_on_register(const SectorRef& sector);
  void start_relocation(const EntryKey& key, const SectorRef& target);

  void do_confiscate(const SectorRef& sector);
  void do_penalize(const SectorRef& sector);
  void declare_lost(FileRecord& rec);
  void remove_file(FileId file, FileState finalState);
  void maybe_retire(const SectorRef& sector);
  void distribute_period_rent(Tick boundary);

  Tokens& balance(AccountId id);
  FileRecord& live_file(FileId id);
  Sector& sector_ref(const SectorRef& ref);

  NetworkState state_;
  RngStream rng_;
  EngineOptions options_;
  EngineStats stats_;
  EngineObserver* observer_ = nullptr;
  std::vector<EngineEvent> events_;
  std::uint64_t nextEventSeq_ = 0;
  std::optional<EngineEvent> current_;
  std::deque<Notice> outbox_;
  bool delivering_ = false;
};

}  // namespace fileinsurer
