#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fileinsurer {

enum class Errc {
  InvalidParams,
  NoSectors,
  ValueNotMultiple,
  FileTooLarge,
  CollisionExhausted,
  NotOwner,
  BadState,
  WrongSector,
  InvalidProof,
  BadCapacity,
  InsufficientFunds,
  InsufficientBalance,
  TimeReversal,
  UnknownFile,
  UnknownSector,
  UnknownAccount,
  NoLiveReplica,
  NotLarge,
  EmptyFileSet,
  DomainError,
  NonIntegralCount,
  TooLarge,
  PreconditionViolation,
  ParseError,
  ValidationError,
  InvariantViolation,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::NoSectors: return "NoSectors";
    case Errc::ValueNotMultiple: return "ValueNotMultiple";
    case Errc::FileTooLarge: return "FileTooLarge";
    case Errc::CollisionExhausted: return "CollisionExhausted";
    case Errc::NotOwner: return "NotOwner";
    case Errc::BadState: return "BadState";
    case Errc::WrongSector: return "WrongSector";
    case Errc::InvalidProof: return "InvalidProof";
    case Errc::BadCapacity: return "BadCapacity";
    case Errc::InsufficientFunds: return "InsufficientFunds";
    case Errc::InsufficientBalance: return "InsufficientBalance";
    case Errc::TimeReversal: return "TimeReversal";
    case Errc::UnknownFile: return "UnknownFile";
    case Errc::UnknownSector: return "UnknownSector";
    case Errc::UnknownAccount: return "UnknownAccount";
    case Errc::NoLiveReplica: return "NoLiveReplica";
    case Errc::NotLarge: return "NotLarge";
    case Errc::EmptyFileSet: return "EmptyFileSet";
    case Errc::DomainError: return "DomainError";
    case Errc::NonIntegralCount: return "NonIntegralCount";
    case Errc::TooLarge: return "TooLarge";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Every rejected request, violated precondition or malformed input surfaces
/// as an Error carrying one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fileinsurer
