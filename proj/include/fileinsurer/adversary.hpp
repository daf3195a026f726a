#pragma once

#include "fileinsurer/behavior.hpp"
#include "fileinsurer/engine.hpp"

#include <memory>

#include <optional>
#include <string_view>
#include <vector>

namespace fileinsurer {

enum class AttackStrategy { Random, Greedy, Exhaustive };

std::string_view to_string(AttackStrategy s);
std::optional<AttackStrategy> parse_attack_strategy(std::string_view s);

/// Largest live sector count the exhaustive strategy enumerates.
inline constexpr std::size_t kExhaustiveLimit = 20;

/// Capacity the adversary may corrupt: floor(lambda * live capacity).
Bytes attack_budget(const NetworkState& state, double lambda);

/// Value of stored files whose every live replica sits in `sectors`.
/// Files already without a live replica are not counted.
Tokens value_lost_if_corrupted(const NetworkState& state, const std::vector<SectorRef>& sectors);

/// Picks live sectors of total capacity within the budget. Results are
/// sorted by (owner, id). Throws DomainError for lambda outside [0, 1] and
/// TooLarge for the exhaustive strategy above kExhaustiveLimit live sectors.
std::vector<SectorRef> adversary_select(const NetworkState& state, double lambda, AttackStrategy strategy,
                                        RngStream& rng);

/// Network built for an attack trial. Sector i gets capacity
/// sectorMultiples[i % size] * minCapacity and belongs to provider
/// i % providers.
struct FileBatch {
  std::uint64_t count = 0;
  Bytes size = 0;
  std::uint32_t valueUnits = 1;  // in minValue
};

struct AttackSetup {
  NetworkParams params;
  FeeSchedule fees;
  std::uint32_t sectors = 8;
  std::vector<std::uint32_t> sectorMultiples{1};
  std::uint32_t providers = 0;  // 0: one provider per sector
  std::vector<FileBatch> files;
  Tokens clientBalance = Tokens::whole(1'000'000);
  /// 0: long enough for the mean refresh countdown to elapse once.
  Tick warmupTicks = 0;
  bool testMode = false;

  Tick warmup() const;
};

struct AttackReport {
  std::uint64_t seed = 0;
  double lambda = 0;
  double lambdaActual = 0;
  Tokens vLost;
  double gammaLost = 0;
  Tokens totalValue;  // value stored when the attack started
  Tokens confiscated;
  Tokens compensationPaid;
  std::uint64_t underCompensations = 0;
  bool fullyCompensated = true;
  std::vector<SectorRef> corrupted;
  std::vector<FileId> lostFileIds;
};

Json to_json(const AttackReport& r);

/// A network after upload and warm-up, driven by honest providers.
struct AttackNetwork {
  AttackNetwork(NetworkState state, std::uint64_t seed, EngineOptions options) : engine(std::move(state), seed, options) {
    engine.set_observer(&honest);
  }
  AttackNetwork(const AttackNetwork&) = delete;
  AttackNetwork& operator=(const AttackNetwork&) = delete;

  ProviderBehaviors honest;
  Engine engine;
};

std::unique_ptr<AttackNetwork> prepare_attack_network(const AttackSetup& setup, std::uint64_t seed);

/// Builds the network, uploads the files through honest providers, runs the
/// warm-up, corrupts the selected sectors and settles losses at once.
AttackReport run_attack_trial(const AttackSetup& setup, double lambda, AttackStrategy strategy, std::uint64_t seed);

}  // namespace fileinsurer
