#include "fileinsurer/experiments.hpp"

#include "fileinsurer/bounds.hpp"
#include "fileinsurer/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace fileinsurer {

std::string_view to_string(SizeDist d) {
  switch (d) {
    case SizeDist::Uniform01: return "uniform01";
    case SizeDist::Uniform12: return "uniform12";
    case SizeDist::Exponential: return "exponential";
    case SizeDist::NormalMuEqVar: return "normalMuEqVar";
    case SizeDist::NormalMuEq2Var: return "normalMuEq2Var";
  }
  return "?";
}

std::string_view to_string(Table3Mode m) {
  return m == Table3Mode::Reallocate ? "reallocate" : "refresh";
}

std::optional<SizeDist> parse_size_dist(std::string_view s) {
  for (auto d : kAllSizeDists) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::optional<Table3Mode> parse_table3_mode(std::string_view s) {
  if (s == "reallocate") return Table3Mode::Reallocate;
  if (s == "refresh") return Table3Mode::Refresh;
  return std::nullopt;
}

double sample_file_size(SizeDist dist, RngStream& rng) {
  switch (dist) {
    case SizeDist::Uniform01: return rng.uniform_open();
    case SizeDist::Uniform12: return 1.0 + rng.uniform01();
    case SizeDist::Exponential: return rng.exponential(1.0);
    case SizeDist::NormalMuEqVar:
    case SizeDist::NormalMuEq2Var: {
      const double sigma = dist == SizeDist::NormalMuEqVar ? 1.0 : std::sqrt(0.5);
      for (;;) {
        const double v = rng.normal(1.0, sigma);
        if (v > 0) return v;
      }
    }
  }
  return 0;
}

void ExperimentConfig::validate() const {
  if (Ns < 1) throw Error(Errc::InvalidParams, "N_s must be at least 1");
  if (Ncp < Ns) throw Error(Errc::InvalidParams, "N_cp must be at least N_s");
  if (trials < 1) throw Error(Errc::InvalidParams, "trials must be at least 1");
  if (!(capacityFactor >= 1)) throw Error(Errc::InvalidParams, "capacityFactor must be at least 1");
}

std::vector<double> sample_backup_sizes(const ExperimentConfig& config) {
  RngStream rng(child_seed(config.seed, 0));
  std::vector<double> sizes(config.Ncp);
  for (auto& s : sizes) s = sample_file_size(config.dist, rng);
  return sizes;
}

Table3Result run_table3(const ExperimentConfig& config) {
  config.validate();
  return run_table3(config, sample_backup_sizes(config));
}

namespace {

double reallocate_trial(const std::vector<double>& sizes, std::uint32_t Ns, double capacity, std::uint64_t seed,
                        std::vector<double>& load) {
  RngStream rng(seed);
  load.assign(Ns, 0.0);
  for (double s : sizes) load[rng.uniform_below(Ns)] += s;
  return *std::max_element(load.begin(), load.end()) / capacity;
}

}  // namespace

Table3Result run_table3(const ExperimentConfig& config, const std::vector<double>& sizes) {
  config.validate();
  if (sizes.size() != config.Ncp) throw Error(Errc::InvalidParams, "size list does not match N_cp");
  const std::uint32_t Ns = config.Ns;
  const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  const double capacity = config.capacityFactor * total / Ns;
  const std::uint64_t placementSeed = child_seed(config.seed, 1);
  Table3Result result;

  if (config.mode == Table3Mode::Reallocate) {
    const unsigned threads = std::max(1u, std::min(config.threads, config.trials));
    std::vector<double> perTrial(config.trials, 0.0);
    auto work = [&](unsigned worker) {
      std::vector<double> load;
      for (std::uint32_t t = worker; t < config.trials; t += threads)
        perTrial[t] = reallocate_trial(sizes, Ns, capacity, child_seed(placementSeed, t), load);
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    result.maxUsage = *std::max_element(perTrial.begin(), perTrial.end());
    return result;
  }

  RngStream rng(placementSeed);
  std::vector<double> load(Ns, 0.0);
  std::vector<std::uint32_t> where(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    where[i] = static_cast<std::uint32_t>(rng.uniform_below(Ns));
    load[where[i]] += sizes[i];
  }
  double peak = *std::max_element(load.begin(), load.end());
  const std::uint64_t moves = static_cast<std::uint64_t>(config.trials) * config.Ncp;
  for (std::uint64_t m = 0; m < moves; ++m) {
    const auto i = rng.uniform_below(sizes.size());
    const auto to = static_cast<std::uint32_t>(rng.uniform_below(Ns));
    if (load[to] + sizes[i] > capacity) {
      ++result.collisions;
      continue;
    }
    load[where[i]] -= sizes[i];
    load[to] += sizes[i];
    where[i] = to;
    peak = std::max(peak, load[to]);
  }
  result.maxUsage = peak / capacity;
  return result;
}

Thm2Check verify_thm2_empirical(std::uint32_t Ns, std::uint64_t ratio, double loadFraction, std::uint64_t trials,
                                std::uint64_t seed) {
  if (!(loadFraction >= 0 && loadFraction <= 0.5)) throw Error(Errc::DomainError, "loadFraction must lie in [0, 1/2]");
  if (Ns < 1 || ratio < 1) throw Error(Errc::DomainError, "N_s and capacity/file-size must be positive");
  Thm2Check out;
  out.trials = trials;
  out.bound = thm2_collision_bound(Ns, static_cast<double>(ratio));
  const auto files = static_cast<std::uint64_t>(std::floor(loadFraction * static_cast<double>(Ns) * ratio));
  // freeCap <= capacity/8  <=>  8 * used >= 7 * capacity.
  std::vector<std::uint64_t> used(Ns);
  for (std::uint64_t t = 0; t < trials; ++t) {
    RngStream rng(child_seed(seed, t));
    std::fill(used.begin(), used.end(), 0);
    for (std::uint64_t f = 0; f < files; ++f) {
      std::uint64_t s;
      do {
        s = rng.uniform_below(Ns);
      } while (used[s] >= ratio);
      ++used[s];
    }
    const bool hit = std::any_of(used.begin(), used.end(), [&](std::uint64_t u) { return 8 * u >= 7 * ratio; });
    if (hit) ++out.hits;
  }
  out.observedFreq = trials ? static_cast<double>(out.hits) / static_cast<double>(trials) : 0.0;
  return out;
}

}  // namespace fileinsurer
