#pragma once

#include "fileinsurer/rng.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace fileinsurer {

enum class SizeDist { Uniform01, Uniform12, Exponential, NormalMuEqVar, NormalMuEq2Var };
enum class Table3Mode { Reallocate, Refresh };

inline constexpr SizeDist kAllSizeDists[] = {SizeDist::Uniform01, SizeDist::Uniform12, SizeDist::Exponential,
                                             SizeDist::NormalMuEqVar, SizeDist::NormalMuEq2Var};

std::string_view to_string(SizeDist d);
std::string_view to_string(Table3Mode m);
std::optional<SizeDist> parse_size_dist(std::string_view s);
std::optional<Table3Mode> parse_table3_mode(std::string_view s);

/// One draw in abstract size units. Exponential has mean 1; the normal
/// variants are N(1, 1) and N(1, 0.5) with non-positive draws rejected.
double sample_file_size(SizeDist dist, RngStream& rng);

struct ExperimentConfig {
  std::uint64_t Ncp = 100000;
  std::uint32_t Ns = 20;
  SizeDist dist = SizeDist::Uniform01;
  Table3Mode mode = Table3Mode::Reallocate;
  std::uint32_t trials = 100;
  std::uint64_t seed = 1;
  double capacityFactor = 2.0;
  unsigned threads = 1;

  /// Throws Error(InvalidParams).
  void validate() const;
};

struct Table3Result {
  double maxUsage = 0;
  /// Collisions skipped in refresh mode (target without room).
  std::uint64_t collisions = 0;
};

/// Backup sizes drawn from the config's size stream.
std::vector<double> sample_backup_sizes(const ExperimentConfig& config);

/// Maximum used/capacity over every sector and instant. Placement draws come
/// from a stream independent of the size stream.
Table3Result run_table3(const ExperimentConfig& config);
Table3Result run_table3(const ExperimentConfig& config, const std::vector<double>& sizes);

struct Thm2Check {
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;  // trials where some sector ended with freeCap <= capacity/8
  double observedFreq = 0;
  double bound = 0;
};

/// Equal-size files at `loadFraction` of total capacity, placed uniformly
/// over N_s equal sectors of `capacityOverFileSize` slots each (full sectors
/// are resampled). Throws DomainError for loadFraction outside [0, 1/2].
Thm2Check verify_thm2_empirical(std::uint32_t Ns, std::uint64_t capacityOverFileSize, double loadFraction,
                                std::uint64_t trials, std::uint64_t seed);

}  // namespace fileinsurer
