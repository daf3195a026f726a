#pragma once

#include "fileinsurer/state.hpp"

#include <vector>

namespace fileinsurer {

/// capacity * gammaDeposit * capPara * minValue / minCapacity.
/// Throws BadCapacity unless capacity is a positive multiple of minCapacity.
Tokens compute_deposit(Bytes capacity, const NetworkParams& params);

struct CycleCharge {
  Tokens rent;
  Tokens gas;
  Tokens total() const { return rent + gas; }
};

/// Price of one ProofCycle for a file: rent for size * cp bytes plus the
/// expected gas of the automatic tasks run on its behalf.
CycleCharge cycle_cost(const FeeSchedule& fees, const NetworkParams& params, const FileDescriptor& f);

/// Moves the next cycle's rent to the network pool and its gas to the burn
/// sink. Throws InsufficientBalance without touching the ledger.
CycleCharge charge_rent_and_gas(NetworkState& state, FileId file);

struct RentPayout {
  AccountId provider;
  Tokens amount;
};

/// Splits the pool over providers by the capacity of their sectors that were
/// live for the whole period starting at `periodStart`; integer remainders
/// stay in the pool.
std::vector<RentPayout> distribute_rent(NetworkState& state, Tick periodStart);

/// trafficPerByte * bytes rounded to the nearest nano-token.
Tokens traffic_fee(const FeeSchedule& fees, Bytes bytes);

/// Escrows payer -> provider traffic fee for a transfer tied to `key`.
/// A zero fee creates no record. Throws InsufficientBalance.
Tokens settle_traffic_fee(NetworkState& state, const EntryKey& key, AccountId payer, AccountId provider,
                          Bytes bytes);
/// Pays a pending escrow to its provider; returns the amount (zero if none).
Tokens release_traffic_fee(NetworkState& state, const EntryKey& key);
/// Returns a pending escrow to its payer; returns the amount (zero if none).
Tokens refund_traffic_fee(NetworkState& state, const EntryKey& key);

struct Confiscation {
  Tokens amount;
  std::vector<EntryKey> corruptedEntries;
};

/// Moves the sector's remaining deposit into the confiscated pool, marks it
/// corrupted and marks the replicas it stored as corrupted. Throws BadState
/// unless the sector is normal or disabled.
Confiscation confiscate(NetworkState& state, const SectorRef& sector);

struct Compensation {
  Tokens paid;
  Tokens shortfall;
};

/// Pays the owner of a lost file its declared value out of the confiscated
/// pool. A short pool pays what it holds and reports the shortfall.
Compensation compensate(NetworkState& state, FileId file);

/// Burns penaltyFraction of the sector's current deposit. Throws BadState
/// for corrupted or removed sectors.
Tokens penalize(NetworkState& state, const SectorRef& sector);

}  // namespace fileinsurer
