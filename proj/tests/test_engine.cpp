#include "fileinsurer/engine.hpp"
#include "support.hpp"

#include <cmath>

using namespace fitest;

TEST(Randomness, SampleExpHasCeilingBias) {
  RngStream rng(3);
  const double mean = 5.0;
  const int n = 1000000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const auto x = sample_exp(rng, mean);
    ASSERT_GE(x, 1);
    sum += static_cast<double>(x);
  }
  // ceil of Exp(mean) is geometric with success 1 - exp(-1/mean).
  const double exact = 1.0 / (1.0 - std::exp(-1.0 / mean));
  EXPECT_NEAR(sum / n, exact, 0.01 * exact);
  EXPECT_NEAR(sum / n, mean + 0.5, 0.01 * (mean + 0.5));
}

TEST(Randomness, RandomIndexUniform) {
  RngStream rng(4);
  int hits[5] = {};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto x = random_index(rng, 4);
    ASSERT_GE(x, 1u);
    ASSERT_LE(x, 4u);
    ++hits[x];
  }
  for (int i = 1; i <= 4; ++i) EXPECT_NEAR(hits[i] / double(n), 0.25, 0.01);
  EXPECT_EQ(error_code([&] { random_index(rng, 0); }), Errc::PreconditionViolation);
}

TEST(Randomness, RandomSectorProportionalToCapacity) {
  Net net(2);
  const auto a = net.e().sector_register(AccountId{1}, 64 * 1024);
  net.e().sector_register(AccountId{2}, 3 * 64 * 1024);
  RngStream rng(8);
  int small = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) small += random_sector(net.st(), rng) == a;
  EXPECT_NEAR(small / double(n), 0.25, 0.01);

  Net empty(0);
  EXPECT_EQ(error_code([&] { random_sector(empty.st(), rng); }), Errc::NoSectors);
}

TEST(Randomness, DisabledSectorsAreNotDrawn) {
  Net net(2);
  const auto a = net.e().sector_register(AccountId{1}, 64 * 1024);
  net.e().sector_register(AccountId{2}, 64 * 1024);
  net.e().sector_disable(AccountId{1}, a);
  RngStream rng(1);
  for (int i = 0; i < 1000; ++i) ASSERT_NE(random_sector(net.st(), rng), a);
}

TEST(Segmentation, ThreeTimesLimitGivesSixSegments) {
  const auto p = small_params();
  FileDescriptor d;
  d.size = 3 * p.sizeLimit;
  d.value = Tokens::whole(4);
  const auto plan = split_large_file(d, p);
  EXPECT_EQ(plan.segments, 6u);
  EXPECT_EQ(plan.recoveryThreshold, 3u);
  ASSERT_EQ(plan.descriptors.size(), 6u);
  for (const auto& s : plan.descriptors) {
    EXPECT_EQ(s.size, p.sizeLimit);
    EXPECT_EQ(s.value, Tokens::whole(2));  // ceil(4 / 3)
  }
  EXPECT_NE(plan.descriptors[0].merkleRoot, plan.descriptors[1].merkleRoot);
  d.size = p.sizeLimit;
  EXPECT_EQ(error_code([&] { split_large_file(d, p); }), Errc::NotLarge);
}

TEST(TransferDelay, RoundsUpToWholeTicks) {
  const auto p = small_params();
  EXPECT_EQ(transfer_delay(p, 1), 1u);
  EXPECT_EQ(transfer_delay(p, 1024), 1u);
  EXPECT_EQ(transfer_delay(p, 1025), 2u);
}

TEST(FileAdd, AllocatesReplicasPerValue) {
  Net net(3);
  for (std::uint32_t i = 1; i <= 3; ++i) net.e().sector_register(AccountId{i}, 64 * 1024);
  const auto f = net.e().file_add(net.client, 1000, Tokens::whole(3));
  EXPECT_EQ(net.file(f).desc.cp, 6u);  // k * value / minValue
  net.e().advance_time(1);
  EXPECT_TRUE(net.file(f).stored);
  net.expect_consistent();
}

TEST(FileAdd, RejectsBadRequests) {
  Net net(1);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  auto& e = net.e();
  EXPECT_EQ(error_code([&] { e.file_add(net.client, 10, Tokens::from_tokens(1.5)); }), Errc::ValueNotMultiple);
  EXPECT_EQ(error_code([&] { e.file_add(net.client, 64 * 1024 + 1, Tokens::whole(1)); }), Errc::FileTooLarge);
  EXPECT_EQ(error_code([&] { e.file_add(AccountId{77}, 10, Tokens::whole(1)); }), Errc::UnknownAccount);
  EXPECT_TRUE(net.st().files.empty());
  net.expect_consistent();
}

TEST(FileAdd, ForcedCollisionExhaustsResamples) {
  Net net(1);
  const auto s = net.e().sector_register(AccountId{1}, 64 * 1024);
  // Two replicas of 40 KiB cannot share one 64 KiB sector.
  EXPECT_EQ(error_code([&] { net.e().file_add(net.client, 40 * 1024, Tokens::whole(1)); }),
            Errc::CollisionExhausted);
  EXPECT_TRUE(net.st().files.empty());
  EXPECT_EQ(net.sector(s).freeCap, 64u * 1024);
  EXPECT_EQ(net.e().events().back().rejected, Errc::CollisionExhausted);
  net.expect_consistent();
}

TEST(FileGet, ReturnsOnlyLiveReplicas) {
  Net net(3);
  std::vector<SectorRef> sectors;
  for (std::uint32_t i = 1; i <= 3; ++i) sectors.push_back(net.e().sector_register(AccountId{i}, 64 * 1024));
  const auto f = net.e().file_add(net.client, 1000, Tokens::whole(2));
  net.e().advance_time(1);
  const auto before = net.e().file_get(net.client, f);
  ASSERT_EQ(before.size(), 4u);
  const SectorRef victim = before.front();
  const std::vector<SectorRef> one{victim};
  net.e().corrupt_sectors(one);
  const auto after = net.e().file_get(net.client, f);
  for (const auto& s : after) EXPECT_NE(s, victim);
  EXPECT_LT(after.size(), before.size());
  EXPECT_EQ(error_code([&] { net.e().file_get(net.client, FileId{99}); }), Errc::UnknownFile);
  net.expect_consistent();
}

TEST(FileProve, CorruptedSectorIsRejected) {
  Net net(2);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  net.e().sector_register(AccountId{2}, 64 * 1024);
  const auto f = net.e().file_add(net.client, 1000, Tokens::whole(1));
  net.e().advance_time(1);
  const SectorRef a = *net.file(f).entries[0].prev;
  const AccountId owner = a.owner, other{3 - a.owner.value};
  EXPECT_EQ(error_code([&] { net.e().file_prove(owner, f, 1, a, Proof{5, true}); }), Errc::InvalidProof);
  net.e().file_prove(owner, f, 1, a, Proof{1, true});
  const std::vector<SectorRef> one{a};
  net.e().corrupt_sectors(one);
  EXPECT_EQ(error_code([&] { net.e().file_prove(owner, f, 1, a, Proof{1, true}); }), Errc::WrongSector);
  EXPECT_EQ(error_code([&] { net.e().file_prove(other, f, 1, a, Proof{1, true}); }), Errc::NotOwner);
}

TEST(CorruptSectors, AtomicRejection) {
  Net net(2);
  const auto a = net.e().sector_register(AccountId{1}, 64 * 1024);
  const auto b = net.e().sector_register(AccountId{2}, 64 * 1024);
  const std::vector<SectorRef> first{a};
  net.e().corrupt_sectors(first);
  const std::vector<SectorRef> both{b, a};
  EXPECT_EQ(error_code([&] { net.e().corrupt_sectors(both); }), Errc::BadState);
  EXPECT_EQ(net.sector(b).state, SectorState::Normal);
  const std::vector<SectorRef> dup{b, b};
  EXPECT_EQ(error_code([&] { net.e().corrupt_sectors(dup); }), Errc::BadState);
  net.expect_consistent();
}

TEST(CorruptSectors, LostFileCompensatedOnSettle) {
  Net net(2);
  const auto a = net.e().sector_register(AccountId{1}, 64 * 1024);
  const auto b = net.e().sector_register(AccountId{2}, 64 * 1024);
  const auto f = net.e().file_add(net.client, 1000, Tokens::whole(1));
  net.e().advance_time(1);
  const Tokens before = net.st().ledger.accounts.at(net.client);
  const std::vector<SectorRef> both{a, b};
  net.e().corrupt_sectors(both);
  net.e().settle_losses();
  EXPECT_EQ(net.file(f).desc.state, FileState::Lost);
  EXPECT_EQ(net.st().ledger.accounts.at(net.client), before + Tokens::whole(1));
  EXPECT_EQ(net.e().stats().underCompensations, 0u);
  net.expect_consistent();
}

TEST(CorruptSectors, EmptySectorOnlyConfiscates) {
  Net net(1);
  const auto a = net.e().sector_register(AccountId{1}, 64 * 1024);
  const Tokens deposit = net.sector(a).deposit;
  const std::vector<SectorRef> one{a};
  net.e().corrupt_sectors(one);
  net.e().settle_losses();
  EXPECT_EQ(net.st().ledger.confiscatedPool, deposit);
  EXPECT_EQ(net.e().stats().filesLost, 0u);
}

TEST(EventLoop, SequenceAndTimeMonotone) {
  Net net(2);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  net.e().sector_register(AccountId{2}, 64 * 1024);
  net.e().file_add(net.client, 1000, Tokens::whole(1));
  net.e().advance_time(200);
  const auto& ev = net.e().events();
  ASSERT_GT(ev.size(), 10u);
  for (std::size_t i = 1; i < ev.size(); ++i) {
    EXPECT_EQ(ev[i].seq, ev[i - 1].seq + 1);
    EXPECT_GE(ev[i].time, ev[i - 1].time);
  }
  EXPECT_EQ(net.st().clock, 200u);
  EXPECT_EQ(error_code([&] { net.e().advance_time(100); }), Errc::TimeReversal);
}

TEST(EventLoop, SameTickTasksRunInOneAdvance) {
  Net net(2);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  net.e().sector_register(AccountId{2}, 64 * 1024);
  const auto f = net.e().file_add(net.client, 1000, Tokens::whole(1));
  net.e().advance_time(1);  // CheckAlloc schedules CheckProof at 11
  net.e().advance_time(11);
  for (const auto& t : net.st().pending) EXPECT_GT(t.time, 11u);
  EXPECT_EQ(net.file(f).entries[0].state, EntryState::Normal);
}

TEST(EventLog, JsonFieldOrder) {
  Net net(1);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  const Json j = to_json(net.e().events().front());
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"seq", "time", "kind", "payload", "outcome"}));
  EXPECT_EQ(j["outcome"]["status"], "ok");
}
