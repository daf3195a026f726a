#include "fileinsurer/economics.hpp"
#include "support.hpp"

using namespace fitest;

TEST(Deposit, FormulaAtWorkedExample) {
  NetworkParams p;
  p.gammaDeposit = 0.0046;
  EXPECT_EQ(compute_deposit(Bytes{128} << 30, p), Tokens::from_tokens(9.2));
  EXPECT_EQ(error_code([&] { compute_deposit(0, p); }), Errc::BadCapacity);
  EXPECT_EQ(error_code([&] { compute_deposit((Bytes{64} << 30) + 1, p); }), Errc::BadCapacity);
  p.gammaDeposit = 0;
  EXPECT_EQ(compute_deposit(Bytes{64} << 30, p), Tokens{});
}

TEST(Rent, ProportionalToSizeTimesReplicas) {
  FeeSchedule f;
  f.rentPerByteReplicaCycle = 0.001;
  FileDescriptor d;
  d.size = 10;
  d.cp = 8;
  EXPECT_EQ(cycle_cost(f, NetworkParams{}, d).rent, Tokens::from_tokens(0.08));
}

struct StoredFile : ::testing::Test {
  Net net{2};
  FileId file;
  void SetUp() override {
    net.e().sector_register(AccountId{1}, 64 * 1024);
    net.e().sector_register(AccountId{2}, 64 * 1024);
    file = net.e().file_add(net.client, 1024, Tokens::whole(5));
    net.e().advance_time(1);
    ASSERT_TRUE(net.file(file).stored);
  }
};

TEST_F(StoredFile, ChargeIsAtomicOnShortBalance) {
  NetworkState st = net.st();
  const Tokens cost = cycle_cost(st.fees, st.params, st.files.at(file).desc).total();
  st.ledger.accounts[AccountId{0}] = cost - Tokens::from_units(1);
  const Tokens pool = st.ledger.networkPool;
  EXPECT_EQ(error_code([&] { charge_rent_and_gas(st, file); }), Errc::InsufficientBalance);
  EXPECT_EQ(st.ledger.accounts[AccountId{0}], cost - Tokens::from_units(1));
  EXPECT_EQ(st.ledger.networkPool, pool);
}

TEST_F(StoredFile, CompensationPaysOutOfPool) {
  NetworkState st = net.st();
  const Tokens before = st.ledger.accounts[AccountId{0}];
  st.ledger.confiscatedPool = Tokens::whole(100);
  auto c = compensate(st, file);
  EXPECT_EQ(c.paid, Tokens::whole(5));
  EXPECT_EQ(c.shortfall, Tokens{});
  EXPECT_EQ(st.ledger.confiscatedPool, Tokens::whole(95));
  EXPECT_EQ(st.ledger.accounts[AccountId{0}], before + Tokens::whole(5));

  st.ledger.confiscatedPool = Tokens::whole(3);
  c = compensate(st, file);
  EXPECT_EQ(c.paid, Tokens::whole(3));
  EXPECT_EQ(c.shortfall, Tokens::whole(2));
  EXPECT_EQ(st.ledger.confiscatedPool, Tokens{});
}

TEST_F(StoredFile, ConfiscationMovesDepositAndFlipsEntries) {
  NetworkState st = net.st();
  const SectorRef s{AccountId{1}, 1};
  const Tokens deposit = st.find_sector(s)->deposit;
  const auto held = st.find_sector(s)->holding.size();
  ASSERT_GE(held, 1u);
  const auto conf = confiscate(st, s);
  EXPECT_EQ(conf.amount, deposit);
  EXPECT_EQ(conf.corruptedEntries.size(), held);
  EXPECT_EQ(st.ledger.confiscatedPool, deposit);
  EXPECT_EQ(st.find_sector(s)->state, SectorState::Corrupted);
  EXPECT_EQ(st.entry(conf.corruptedEntries.front()).state, EntryState::Corrupted);
  EXPECT_EQ(circulating_total(st), st.ledger.minted);
  EXPECT_EQ(error_code([&] { confiscate(st, s); }), Errc::BadState);
  EXPECT_EQ(error_code([&] { penalize(st, s); }), Errc::BadState);
}

TEST(Penalty, CompoundsOnRemainingDeposit) {
  Net net(1);
  const auto s = net.e().sector_register(AccountId{1}, 64 * 1024);
  NetworkState st = net.st();
  st.find_sector(s)->deposit = Tokens::whole(100);
  st.ledger.minted = circulating_total(st);
  EXPECT_EQ(penalize(st, s), Tokens::whole(1));
  EXPECT_EQ(st.find_sector(s)->deposit, Tokens::whole(99));
  EXPECT_EQ(st.ledger.burnSink, Tokens::whole(1));
  EXPECT_EQ(penalize(st, s), Tokens::from_tokens(0.99));
  EXPECT_EQ(st.find_sector(s)->deposit, Tokens::from_tokens(98.01));
  EXPECT_EQ(circulating_total(st), st.ledger.minted);
}

TEST(RentDistribution, SplitsByCapacity) {
  Net net(2);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  net.e().sector_register(AccountId{2}, 3 * 64 * 1024);
  NetworkState st = net.st();
  const Tokens b1 = st.ledger.accounts[AccountId{1}], b2 = st.ledger.accounts[AccountId{2}];
  st.ledger.networkPool = Tokens::whole(4);
  const auto payouts = distribute_rent(st, 0);
  ASSERT_EQ(payouts.size(), 2u);
  EXPECT_EQ(st.ledger.accounts[AccountId{1}] - b1, Tokens::whole(1));
  EXPECT_EQ(st.ledger.accounts[AccountId{2}] - b2, Tokens::whole(3));
  EXPECT_EQ(st.ledger.networkPool, Tokens{});

  st.ledger.networkPool = Tokens::from_units(5);
  distribute_rent(st, 0);
  EXPECT_EQ(st.ledger.networkPool, Tokens::from_units(1));  // remainder carried

  st.ledger.networkPool = Tokens{};
  EXPECT_TRUE(distribute_rent(st, 0).empty());
}

TEST(RentDistribution, CorruptedSectorEarnsNothing) {
  Net net(2);
  net.e().sector_register(AccountId{1}, 64 * 1024);
  const auto s2 = net.e().sector_register(AccountId{2}, 64 * 1024);
  NetworkState st = net.st();
  confiscate(st, s2);
  const Tokens b2 = st.ledger.accounts[AccountId{2}];
  st.ledger.networkPool = Tokens::whole(4);
  const auto payouts = distribute_rent(st, 0);
  ASSERT_EQ(payouts.size(), 1u);
  EXPECT_EQ(payouts[0].provider, AccountId{1});
  EXPECT_EQ(st.ledger.accounts[AccountId{2}], b2);
}

TEST(Traffic, EscrowReleaseRefundAndZero) {
  Net net(1);
  NetworkState st = net.st();
  const EntryKey k{FileId{1}, 1};
  const Tokens fee = settle_traffic_fee(st, k, AccountId{0}, AccountId{1}, 1000);
  EXPECT_EQ(fee, Tokens::from_tokens(0.001));
  EXPECT_EQ(st.ledger.escrowPool, fee);
  EXPECT_EQ(release_traffic_fee(st, k), fee);
  EXPECT_EQ(st.ledger.accounts[AccountId{1}], Tokens::whole(1000) + fee);

  settle_traffic_fee(st, k, AccountId{0}, AccountId{1}, 2000);
  EXPECT_EQ(refund_traffic_fee(st, k), Tokens::from_tokens(0.002));
  EXPECT_EQ(st.ledger.accounts[AccountId{0}], Tokens::whole(100) - fee);

  EXPECT_EQ(settle_traffic_fee(st, k, AccountId{0}, AccountId{1}, 0), Tokens{});
  EXPECT_TRUE(st.ledger.escrows.empty());
  EXPECT_EQ(circulating_total(st), st.ledger.minted);

  st.ledger.accounts[AccountId{0}] = Tokens{};
  EXPECT_EQ(error_code([&] { settle_traffic_fee(st, k, AccountId{0}, AccountId{1}, 10); }),
            Errc::InsufficientBalance);
}
