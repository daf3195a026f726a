#include "fileinsurer/adversary.hpp"

#include "fileinsurer/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace fileinsurer {

std::string_view to_string(AttackStrategy s) {
  switch (s) {
    case AttackStrategy::Random: return "random";
    case AttackStrategy::Greedy: return "greedy";
    case AttackStrategy::Exhaustive: return "exhaustive";
  }
  return "?";
}

std::optional<AttackStrategy> parse_attack_strategy(std::string_view s) {
  for (auto v : {AttackStrategy::Random, AttackStrategy::Greedy, AttackStrategy::Exhaustive}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

namespace {

struct LiveView {
  std::vector<const Sector*> sectors;  // sorted by ref
  std::map<SectorRef, std::size_t> pos;
  Bytes capacity = 0;
  // Per stored file: distinct positions of live holders, and its value.
  std::vector<std::vector<std::size_t>> holders;
  std::vector<std::int64_t> values;
};

LiveView live_view(const NetworkState& state) {
  LiveView v;
  for (const auto& s : state.sectors) {
    if (s.live()) v.sectors.push_back(&s);
  }
  std::sort(v.sectors.begin(), v.sectors.end(), [](const Sector* a, const Sector* b) { return a->ref < b->ref; });
  for (std::size_t i = 0; i < v.sectors.size(); ++i) {
    v.pos[v.sectors[i]->ref] = i;
    v.capacity += v.sectors[i]->capacity;
  }
  for (const auto& [id, rec] : state.files) {
    if (!rec.stored || (rec.desc.state != FileState::Normal && rec.desc.state != FileState::Discard)) continue;
    std::vector<std::size_t> h;
    for (const auto& e : rec.entries) {
      if (!e.prev) continue;
      auto it = v.pos.find(*e.prev);
      if (it != v.pos.end()) h.push_back(it->second);
    }
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
    if (h.empty()) continue;
    v.holders.push_back(std::move(h));
    v.values.push_back(rec.desc.value.units());
  }
  return v;
}

std::vector<SectorRef> select_random(const LiveView& v, Bytes budget, RngStream& rng) {
  // Capacity-weighted random order (key u^(1/w)), then greedy fill.
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(v.sectors.size());
  for (std::size_t i = 0; i < v.sectors.size(); ++i) {
    const double w = static_cast<double>(v.sectors[i]->capacity);
    keyed.emplace_back(std::log(rng.uniform_open()) / w, i);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<SectorRef> out;
  Bytes used = 0;
  for (const auto& [key, i] : keyed) {
    const Bytes cap = v.sectors[i]->capacity;
    if (used + cap > budget) continue;
    used += cap;
    out.push_back(v.sectors[i]->ref);
  }
  return out;
}

std::vector<SectorRef> select_greedy(const LiveView& v, Bytes budget) {
  const std::size_t n = v.sectors.size();
  std::vector<std::vector<std::size_t>> filesOf(n);
  for (std::size_t f = 0; f < v.holders.size(); ++f) {
    for (auto s : v.holders[f]) filesOf[s].push_back(f);
  }
  std::vector<std::size_t> remaining(v.holders.size());
  std::vector<double> score(n, 0.0);
  for (std::size_t f = 0; f < v.holders.size(); ++f) {
    remaining[f] = v.holders[f].size();
    for (auto s : v.holders[f]) score[s] += static_cast<double>(v.values[f]) / static_cast<double>(remaining[f]);
  }
  std::vector<bool> taken(n, false);
  std::vector<SectorRef> out;
  Bytes used = 0;
  for (;;) {
    std::size_t best = n;
    for (std::size_t s = 0; s < n; ++s) {
      if (taken[s] || used + v.sectors[s]->capacity > budget) continue;
      if (best == n || score[s] > score[best]) best = s;
    }
    if (best == n) break;
    taken[best] = true;
    used += v.sectors[best]->capacity;
    out.push_back(v.sectors[best]->ref);
    for (auto f : filesOf[best]) {
      const auto val = static_cast<double>(v.values[f]);
      const std::size_t r = remaining[f]--;
      for (auto s : v.holders[f]) {
        if (taken[s]) continue;
        score[s] += r > 1 ? val / static_cast<double>(r - 1) - val / static_cast<double>(r) : 0.0;
      }
    }
  }
  return out;
}

std::vector<SectorRef> select_exhaustive(const LiveView& v, Bytes budget) {
  const std::size_t n = v.sectors.size();
  if (n > kExhaustiveLimit) throw Error(Errc::TooLarge, std::to_string(n) + " live sectors");
  const std::size_t masks = std::size_t{1} << n;
  // lost[m] = value of files whose holder set is a subset of m (zeta transform).
  std::vector<std::int64_t> lost(masks, 0);
  for (std::size_t f = 0; f < v.holders.size(); ++f) {
    std::size_t m = 0;
    for (auto s : v.holders[f]) m |= std::size_t{1} << s;
    lost[m] += v.values[f];
  }
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t m = 0; m < masks; ++m) {
      if (m & (std::size_t{1} << b)) lost[m] += lost[m ^ (std::size_t{1} << b)];
    }
  }
  std::vector<Bytes> cap(masks, 0);
  std::size_t best = 0;
  for (std::size_t m = 1; m < masks; ++m) {
    const std::size_t low = m & (~m + 1);
    cap[m] = cap[m ^ low] + v.sectors[static_cast<std::size_t>(__builtin_ctzll(low))]->capacity;
    if (cap[m] > budget) continue;
    if (lost[m] > lost[best] || (lost[m] == lost[best] && cap[m] > cap[best])) best = m;
  }
  std::vector<SectorRef> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (best & (std::size_t{1} << s)) out.push_back(v.sectors[s]->ref);
  }
  return out;
}

}  // namespace

Bytes attack_budget(const NetworkState& state, double lambda) {
  if (!(lambda >= 0 && lambda <= 1)) throw Error(Errc::DomainError, "lambda must lie in [0, 1]");
  long double total = 0;
  for (const auto& s : state.sectors) {
    if (s.live()) total += s.capacity;
  }
  return static_cast<Bytes>(std::floor(static_cast<long double>(lambda) * total));
}

Tokens value_lost_if_corrupted(const NetworkState& state, const std::vector<SectorRef>& sectors) {
  const LiveView v = live_view(state);
  std::vector<bool> hit(v.sectors.size(), false);
  for (const auto& ref : sectors) {
    auto it = v.pos.find(ref);
    if (it != v.pos.end()) hit[it->second] = true;
  }
  std::int64_t lost = 0;
  for (std::size_t f = 0; f < v.holders.size(); ++f) {
    if (std::all_of(v.holders[f].begin(), v.holders[f].end(), [&](std::size_t s) { return hit[s]; }))
      lost += v.values[f];
  }
  return Tokens::from_units(lost);
}

std::vector<SectorRef> adversary_select(const NetworkState& state, double lambda, AttackStrategy strategy,
                                        RngStream& rng) {
  const Bytes budget = attack_budget(state, lambda);
  const LiveView v = live_view(state);
  std::vector<SectorRef> out;
  switch (strategy) {
    case AttackStrategy::Random: out = select_random(v, budget, rng); break;
    case AttackStrategy::Greedy: out = select_greedy(v, budget); break;
    case AttackStrategy::Exhaustive: out = select_exhaustive(v, budget); break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

Tick AttackSetup::warmup() const {
  if (warmupTicks) return warmupTicks;
  const auto cycles = static_cast<Tick>(std::ceil(params.avgRefresh)) + 1;
  return cycles * params.proofCycle + 1;
}

Json to_json(const AttackReport& r) {
  Json j;
  j["seed"] = r.seed;
  j["lambda"] = r.lambda;
  j["lambdaActual"] = r.lambdaActual;
  j["vLost"] = r.vLost.units();
  j["gammaLost"] = r.gammaLost;
  j["totalValue"] = r.totalValue.units();
  j["confiscated"] = r.confiscated.units();
  j["compensationPaid"] = r.compensationPaid.units();
  j["underCompensations"] = r.underCompensations;
  j["fullyCompensated"] = r.fullyCompensated;
  Json sectors = Json::array();
  for (const auto& s : r.corrupted) sectors.push_back(to_json(s));
  j["corrupted"] = std::move(sectors);
  Json lost = Json::array();
  for (const auto& f : r.lostFileIds) lost.push_back(f.value);
  j["lostFileIds"] = std::move(lost);
  return j;
}

std::unique_ptr<AttackNetwork> prepare_attack_network(const AttackSetup& setup, std::uint64_t seed) {
  if (setup.sectors == 0 || setup.sectorMultiples.empty())
    throw Error(Errc::ValidationError, "attack setup needs at least one sector");
  const std::uint32_t providers = setup.providers ? setup.providers : setup.sectors;
  auto capacity = [&](std::uint32_t i) {
    return setup.params.minCapacity * setup.sectorMultiples[i % setup.sectorMultiples.size()];
  };
  std::vector<Tokens> need(providers);
  for (std::uint32_t i = 0; i < setup.sectors; ++i) need[i % providers] += deposit_formula(capacity(i), setup.params);
  std::map<AccountId, Tokens> balances;
  const AccountId client{0};
  balances[client] = setup.clientBalance;
  for (std::uint32_t p = 0; p < providers; ++p) balances[AccountId{p + 1}] = need[p];

  EngineOptions opts;
  opts.testMode = setup.testMode;
  opts.recordEvents = false;
  opts.keepTombstones = true;
  auto net = std::make_unique<AttackNetwork>(init_network(setup.params, setup.fees, balances), child_seed(seed, 0), opts);
  Engine& engine = net->engine;
  for (std::uint32_t i = 0; i < setup.sectors; ++i) engine.sector_register(AccountId{i % providers + 1}, capacity(i));
  for (const auto& batch : setup.files) {
    const Tokens value = setup.params.minValue * batch.valueUnits;
    for (std::uint64_t f = 0; f < batch.count; ++f) engine.file_add(client, batch.size, value);
  }
  engine.advance_time(setup.warmup());
  return net;
}

AttackReport run_attack_trial(const AttackSetup& setup, double lambda, AttackStrategy strategy, std::uint64_t seed) {
  auto net = prepare_attack_network(setup, seed);
  Engine& engine = net->engine;

  AttackReport r;
  r.seed = seed;
  r.lambda = lambda;
  for (const auto& [id, rec] : engine.state().files) {
    if (rec.stored && rec.desc.state == FileState::Normal) r.totalValue += rec.desc.value;
  }
  RngStream adversaryRng(child_seed(seed, 1));
  r.corrupted = adversary_select(engine.state(), lambda, strategy, adversaryRng);

  long double liveCap = 0, hitCap = 0;
  for (const auto& s : engine.state().sectors) {
    if (s.live()) liveCap += s.capacity;
  }
  for (const auto& ref : r.corrupted) hitCap += engine.state().find_sector(ref)->capacity;
  r.lambdaActual = liveCap > 0 ? static_cast<double>(hitCap / liveCap) : 0.0;

  const EngineStats before = engine.stats();
  engine.corrupt_sectors(r.corrupted);
  engine.settle_losses();
  const EngineStats& after = engine.stats();

  for (const auto& [id, rec] : engine.state().files) {
    if (rec.desc.state == FileState::Lost) {
      r.lostFileIds.push_back(id);
      r.vLost += rec.desc.value;
    }
  }
  r.confiscated = after.confiscated - before.confiscated;
  r.compensationPaid = after.compensationPaid - before.compensationPaid;
  r.underCompensations = after.underCompensations - before.underCompensations;
  r.fullyCompensated = r.underCompensations == 0;
  const long double nv = static_cast<long double>(r.totalValue.units()) / setup.params.minValue.units();
  const long double lostUnits = static_cast<long double>(r.vLost.units()) / setup.params.minValue.units();
  r.gammaLost = nv > 0 ? static_cast<double>(lostUnits / nv) : 0.0;
  return r;
}

}  // namespace fileinsurer
