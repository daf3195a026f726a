#include "fileinsurer/state.hpp"
#include "fileinsurer/rng.hpp"
#include "fileinsurer/weighted_sampler.hpp"
#include "support.hpp"

using namespace fitest;

TEST(InitNetwork, MintsInitialBalances) {
  const auto st = init_network(small_params(), small_fees(), {{AccountId{0}, Tokens::whole(100)}});
  EXPECT_EQ(st.clock, 0u);
  EXPECT_TRUE(st.sectors.empty());
  EXPECT_TRUE(st.files.empty());
  EXPECT_TRUE(st.pending.empty());
  EXPECT_EQ(circulating_total(st), Tokens::whole(100));
  EXPECT_EQ(st.ledger.minted, Tokens::whole(100));
}

TEST(InitNetwork, RejectsInvalidParams) {
  auto p = small_params();
  p.proofDue = p.proofDeadline;
  EXPECT_EQ(error_code([&] { init_network(p, small_fees(), {}); }), Errc::InvalidParams);
  p = small_params();
  p.c = 0;
  EXPECT_EQ(error_code([&] { init_network(p, small_fees(), {}); }), Errc::InvalidParams);
  p = small_params();
  p.sizeLimit = p.minCapacity + 1;
  EXPECT_EQ(p.violations().size(), 1u);
}

TEST(RefillCrs, FillsFreeSpaceWithWholeReplicas) {
  Sector s;
  s.capacity = 8 * 1024;
  s.freeCap = 6 * 1024;
  s.crCount = 2;
  refill_crs(s, 1024);
  EXPECT_EQ(s.crCount, 6u);
  EXPECT_EQ(unsealed_space(s, 1024), 0u);

  s.freeCap = 0;
  refill_crs(s, 1024);
  EXPECT_EQ(s.crCount, 0u);

  s.freeCap = 2 * 1024 + 512;
  refill_crs(s, 1024);
  EXPECT_EQ(s.crCount, 2u);
  EXPECT_EQ(unsealed_space(s, 1024), 512u);
}

TEST(WeightedSampler, FrequenciesFollowWeights) {
  WeightedSampler<std::uint64_t> ws;
  ws.push_back(1);
  ws.push_back(3);
  RngStream rng(11);
  int hits[2] = {0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hits[ws.find(rng.uniform_below(ws.total()))];
  EXPECT_NEAR(hits[0] / double(n), 0.25, 0.01);
  EXPECT_NEAR(hits[1] / double(n), 0.75, 0.01);
}

TEST(WeightedSampler, MatchesLinearScanAfterUpdates) {
  WeightedSampler<std::uint64_t> ws;
  std::vector<std::uint64_t> w;
  RngStream rng(5);
  for (int i = 0; i < 37; ++i) {
    w.push_back(rng.uniform_below(10));
    ws.push_back(w.back());
  }
  for (int i = 0; i < 50; ++i) {
    const auto j = rng.uniform_below(w.size());
    w[j] = rng.uniform_below(10);
    ws.set(j, w[j]);
  }
  std::uint64_t total = 0;
  for (auto x : w) total += x;
  ASSERT_EQ(ws.total(), total);
  for (std::uint64_t t = 0; t < total; ++t) {
    std::uint64_t acc = 0;
    std::size_t expect = 0;
    while (acc + w[expect] <= t) acc += w[expect++];
    EXPECT_EQ(ws.find(t), expect);
  }
}

TEST(Rng, SameSeedSameStream) {
  RngStream a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.counter(), 100u);
  EXPECT_NE(child_seed(1, 0), child_seed(1, 1));
  EXPECT_EQ(child_seed(1, 7), child_seed(1, 7));
}

TEST(Snapshot, SectorsOrderedByOwnerThenId) {
  Net net(3);
  net.e().sector_register(AccountId{3}, 64 * 1024);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  net.e().sector_register(AccountId{1}, 128 * 1024);
  const Json snap = snapshot_json(net.st());
  std::vector<std::pair<int, int>> order;
  for (const auto& s : snap["sectors"]) order.emplace_back(s["owner"].get<int>(), s["id"].get<int>());
  EXPECT_EQ(order, (std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {3, 1}}));
  EXPECT_EQ(snap.dump(), snapshot_json(net.st()).dump());
}

TEST(Validator, DetectsTamperedFreeCap) {
  Net net(1);
  const auto s = net.e().sector_register(AccountId{1}, 64 * 1024);
  NetworkState copy = net.st();
  copy.find_sector(s)->freeCap -= 1;
  EXPECT_FALSE(find_violations(copy).empty());
  EXPECT_EQ(error_code([&] { validate_state(copy); }), Errc::InvariantViolation);
}
