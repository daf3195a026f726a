#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace fileinsurer {

using Tick = std::uint64_t;
using Bytes = std::uint64_t;

struct AccountId {
  std::uint32_t value = 0;
  auto operator<=>(const AccountId&) const = default;
};

struct FileId {
  std::uint64_t value = 0;
  auto operator<=>(const FileId&) const = default;
};

/// Sector identity: a provider cannot own two sectors with the same id.
struct SectorRef {
  AccountId owner;
  std::uint32_t id = 0;
  auto operator<=>(const SectorRef&) const = default;
};

/// (file, 1-based replica index) key into the allocation table.
struct EntryKey {
  FileId file;
  std::uint32_t index = 0;
  auto operator<=>(const EntryKey&) const = default;
};

using Digest = std::array<std::uint8_t, 32>;

/// Fixed-point token amount in nano-tokens. Integer arithmetic keeps the
/// ledger conservation check exact.
class Tokens {
 public:
  static constexpr std::int64_t kUnitsPerToken = 1'000'000'000;

  constexpr Tokens() = default;
  static constexpr Tokens from_units(std::int64_t units) { return Tokens(units); }
  static Tokens from_tokens(double tokens) {
    return Tokens(static_cast<std::int64_t>(std::llround(tokens * static_cast<double>(kUnitsPerToken))));
  }
  static constexpr Tokens whole(std::int64_t tokens) { return Tokens(tokens * kUnitsPerToken); }

  constexpr std::int64_t units() const { return units_; }
  double tokens() const { return static_cast<double>(units_) / static_cast<double>(kUnitsPerToken); }

  constexpr Tokens& operator+=(Tokens o) { units_ += o.units_; return *this; }
  constexpr Tokens& operator-=(Tokens o) { units_ -= o.units_; return *this; }
  friend constexpr Tokens operator+(Tokens a, Tokens b) { return Tokens(a.units_ + b.units_); }
  friend constexpr Tokens operator-(Tokens a, Tokens b) { return Tokens(a.units_ - b.units_); }
  friend constexpr Tokens operator*(Tokens a, std::int64_t n) { return Tokens(a.units_ * n); }
  auto operator<=>(const Tokens&) const = default;

 private:
  constexpr explicit Tokens(std::int64_t units) : units_(units) {}
  std::int64_t units_ = 0;
};

inline std::string to_string(const SectorRef& s) {
  return std::to_string(s.owner.value) + ":" + std::to_string(s.id);
}

}  // namespace fileinsurer
