#include "fileinsurer/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fileinsurer {

namespace {

[[noreturn]] void parse_fail(const YAML::Mark& mark, const std::string& what) {
  throw Error(Errc::ParseError,
              "line " + std::to_string(mark.line + 1) + ", column " + std::to_string(mark.column + 1) + ": " + what);
}

template <typename T>
T as(const YAML::Node& n, const char* field) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    parse_fail(n.Mark(), std::string("bad value for '") + field + "'");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* field, T& out) {
  const YAML::Node n = parent[field];
  if (n) out = as<T>(n, field);
}

void read_tokens(const YAML::Node& parent, const char* field, Tokens& out) {
  const YAML::Node n = parent[field];
  if (n) out = Tokens::from_tokens(as<double>(n, field));
}

void check_keys(const YAML::Node& map, std::initializer_list<const char*> known, const char* where) {
  if (!map.IsMap()) parse_fail(map.Mark(), std::string(where) + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) parse_fail(kv.first.Mark(), "unknown key '" + key + "' in " + where);
  }
}

NetworkParams read_params(const YAML::Node& n) {
  NetworkParams p;
  if (!n) return p;
  check_keys(n,
             {"minCapacity", "minValue", "k", "capPara", "gammaDeposit", "delayPerSize", "avgRefresh", "proofCycle",
              "proofDue", "proofDeadline", "crSize", "sizeLimit", "c", "penaltyFraction"},
             "params");
  read(n, "minCapacity", p.minCapacity);
  // Derived defaults follow minCapacity unless given explicitly.
  p.crSize = p.minCapacity / 64;
  p.sizeLimit = p.minCapacity / 1000;
  read_tokens(n, "minValue", p.minValue);
  read(n, "k", p.k);
  read(n, "capPara", p.capPara);
  read(n, "gammaDeposit", p.gammaDeposit);
  read(n, "delayPerSize", p.delayPerSize);
  read(n, "avgRefresh", p.avgRefresh);
  read(n, "proofCycle", p.proofCycle);
  read(n, "proofDue", p.proofDue);
  read(n, "proofDeadline", p.proofDeadline);
  read(n, "crSize", p.crSize);
  read(n, "sizeLimit", p.sizeLimit);
  read(n, "c", p.c);
  read(n, "penaltyFraction", p.penaltyFraction);
  return p;
}

FeeSchedule read_fees(const YAML::Node& n) {
  FeeSchedule f;
  if (!n) return f;
  check_keys(n, {"rentPerByteReplicaCycle", "gas", "trafficPerByte", "periodLength"}, "fees");
  read(n, "rentPerByteReplicaCycle", f.rentPerByteReplicaCycle);
  read(n, "trafficPerByte", f.trafficPerByte);
  read(n, "periodLength", f.periodLength);
  if (const YAML::Node g = n["gas"]) {
    check_keys(g, {"checkAlloc", "checkProof", "refresh", "checkRefresh"}, "fees.gas");
    read(g, "checkAlloc", f.gas.checkAlloc);
    read(g, "checkProof", f.gas.checkProof);
    read(g, "refresh", f.gas.refresh);
    read(g, "checkRefresh", f.gas.checkRefresh);
  }
  return f;
}

Behavior read_behavior(const YAML::Node& parent) {
  Behavior b;
  if (const YAML::Node n = parent["behavior"]) {
    const auto name = as<std::string>(n, "behavior");
    const auto kind = parse_behavior(name);
    if (!kind) parse_fail(n.Mark(), "unknown behavior '" + name + "'");
    b.kind = *kind;
  }
  read(parent, "every", b.every);
  return b;
}

AttackSection read_attack(const YAML::Node& n, const NetworkParams& params, const FeeSchedule& fees) {
  AttackSection a;
  if (!n) return a;
  check_keys(n,
             {"sectors", "sectorMultiples", "providers", "files", "lambda", "strategy", "trials", "warmupTicks",
              "clientBalance"},
             "attack");
  a.present = true;
  a.setup.params = params;
  a.setup.fees = fees;
  read(n, "sectors", a.setup.sectors);
  read(n, "sectorMultiples", a.setup.sectorMultiples);
  read(n, "providers", a.setup.providers);
  read(n, "warmupTicks", a.setup.warmupTicks);
  read_tokens(n, "clientBalance", a.setup.clientBalance);
  read(n, "lambda", a.lambda);
  read(n, "trials", a.trials);
  if (const YAML::Node s = n["strategy"]) {
    const auto name = as<std::string>(s, "strategy");
    const auto st = parse_attack_strategy(name);
    if (!st) parse_fail(s.Mark(), "unknown strategy '" + name + "'");
    a.strategy = *st;
  }
  if (const YAML::Node files = n["files"]) {
    if (!files.IsSequence()) parse_fail(files.Mark(), "attack.files must be a list");
    for (const auto& f : files) {
      check_keys(f, {"count", "size", "value"}, "attack.files entry");
      FileBatch b;
      read(f, "count", b.count);
      read(f, "size", b.size);
      read(f, "value", b.valueUnits);
      a.setup.files.push_back(b);
    }
  }
  return a;
}

const std::set<std::string> kOps = {"file_add",       "file_discard", "file_get",       "file_confirm",
                                    "file_prove",     "sector_register", "sector_disable", "corrupt",
                                    "set_behavior",   "settle_losses"};

ScriptStep read_step(const YAML::Node& n) {
  check_keys(n,
             {"at", "op", "actor", "size", "capacity", "value", "label", "file", "index", "sector", "sectors", "t",
              "valid", "behavior", "every"},
             "script step");
  ScriptStep s;
  s.line = n.Mark().line + 1;
  if (!n["at"] || !n["op"]) parse_fail(n.Mark(), "script step needs 'at' and 'op'");
  read(n, "at", s.at);
  read(n, "op", s.op);
  if (!kOps.count(s.op)) parse_fail(n["op"].Mark(), "unknown op '" + s.op + "'");
  read(n, "actor", s.actor);
  read(n, "size", s.size);
  read(n, "capacity", s.capacity);
  read_tokens(n, "value", s.value);
  read(n, "label", s.label);
  read(n, "file", s.file);
  read(n, "index", s.index);
  read(n, "sector", s.sector);
  read(n, "sectors", s.sectors);
  if (n["t"]) {
    read(n, "t", s.proofTime);
    s.proofTimeSet = true;
  }
  read(n, "valid", s.valid);
  s.behavior = read_behavior(n);
  return s;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::ValidationError, what); }

std::string step_where(const ScriptStep& s) { return "script step at line " + std::to_string(s.line); }

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    parse_fail(e.mark, e.msg);
  }
  if (!root.IsMap()) throw Error(Errc::ParseError, "line 1, column 1: scenario must be a mapping");
  check_keys(root, {"version", "params", "fees", "actors", "script", "duration", "attack"}, "scenario");
  Scenario s;
  if (!root["version"]) invalid("missing mandatory field 'version'");
  read(root, "version", s.version);
  s.params = read_params(root["params"]);
  s.fees = read_fees(root["fees"]);
  if (const YAML::Node actors = root["actors"]) {
    if (!actors.IsSequence()) parse_fail(actors.Mark(), "actors must be a list");
    for (const auto& a : actors) {
      check_keys(a, {"name", "role", "balance", "behavior", "every"}, "actor");
      Actor actor;
      read(a, "name", actor.name);
      std::string role = "client";
      read(a, "role", role);
      if (role == "client") actor.role = ActorRole::Client;
      else if (role == "provider") actor.role = ActorRole::Provider;
      else parse_fail(a["role"].Mark(), "role must be client or provider");
      read_tokens(a, "balance", actor.balance);
      actor.behavior = read_behavior(a);
      s.actors.push_back(std::move(actor));
    }
  }
  if (const YAML::Node script = root["script"]) {
    if (!script.IsSequence()) parse_fail(script.Mark(), "script must be a list");
    for (const auto& step : script) s.script.push_back(read_step(step));
  }
  read(root, "duration", s.duration);
  s.attack = read_attack(root["attack"], s.params, s.fees);
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void validate_scenario(const Scenario& s) {
  if (s.version != kScenarioVersion) invalid("unsupported version " + std::to_string(s.version));
  if (auto v = s.params.violations(); !v.empty()) invalid("params: " + v.front());
  if (auto v = s.fees.violations(s.params); !v.empty()) invalid("fees: " + v.front());

  std::map<std::string, ActorRole> roles;
  for (const auto& a : s.actors) {
    if (a.name.empty()) invalid("actor without a name");
    if (!roles.emplace(a.name, a.role).second) invalid("duplicate actor '" + a.name + "'");
    if (a.balance < Tokens{}) invalid("actor '" + a.name + "' has a negative balance");
  }
  auto need_actor = [&](const ScriptStep& st, ActorRole role) {
    auto it = roles.find(st.actor);
    if (it == roles.end()) invalid(step_where(st) + ": unknown actor '" + st.actor + "'");
    if (it->second != role)
      invalid(step_where(st) + ": actor '" + st.actor + "' is not a " +
              (role == ActorRole::Client ? "client" : "provider"));
  };
  auto need_sector = [&](const ScriptStep& st, const std::string& ref) {
    const auto colon = ref.rfind(':');
    if (colon == std::string::npos) invalid(step_where(st) + ": sector must be written provider:id");
    auto it = roles.find(ref.substr(0, colon));
    if (it == roles.end() || it->second != ActorRole::Provider)
      invalid(step_where(st) + ": unknown provider in sector '" + ref + "'");
  };

  std::set<std::string> labels;
  Tick prev = 0;
  for (const auto& st : s.script) {
    if (st.at < prev) invalid(step_where(st) + ": script times must be non-decreasing");
    prev = st.at;
    if (st.at > s.duration) invalid(step_where(st) + ": step after duration");
    if (st.op == "file_add") {
      need_actor(st, ActorRole::Client);
      if (st.value <= Tokens{} || st.value.units() % s.params.minValue.units() != 0)
        invalid(step_where(st) + ": file value must be a positive multiple of minValue");
      if (st.size == 0) invalid(step_where(st) + ": file size must be positive");
      if (!st.label.empty() && !labels.insert(st.label).second)
        invalid(step_where(st) + ": duplicate file label '" + st.label + "'");
    } else if (st.op == "file_discard" || st.op == "file_get") {
      need_actor(st, ActorRole::Client);
      if (!labels.count(st.file)) invalid(step_where(st) + ": unknown file '" + st.file + "'");
    } else if (st.op == "file_confirm" || st.op == "file_prove") {
      need_actor(st, ActorRole::Provider);
      if (!labels.count(st.file)) invalid(step_where(st) + ": unknown file '" + st.file + "'");
      need_sector(st, st.sector);
    } else if (st.op == "sector_register") {
      need_actor(st, ActorRole::Provider);
    } else if (st.op == "sector_disable") {
      need_actor(st, ActorRole::Provider);
      need_sector(st, st.sector);
    } else if (st.op == "corrupt") {
      for (const auto& ref : st.sectors) need_sector(st, ref);
    } else if (st.op == "set_behavior") {
      need_actor(st, ActorRole::Provider);
    }
  }
  if (s.attack.present) {
    if (!(s.attack.lambda >= 0 && s.attack.lambda <= 1)) invalid("attack.lambda must lie in [0, 1]");
    if (s.attack.setup.sectors == 0) invalid("attack.sectors must be positive");
    if (s.attack.setup.sectorMultiples.empty()) invalid("attack.sectorMultiples must not be empty");
    for (const auto& b : s.attack.setup.files) {
      if (b.valueUnits == 0) invalid("attack file value must be positive");
      if (b.size == 0 || b.size > s.params.sizeLimit) invalid("attack file size must lie in [1, sizeLimit]");
    }
  }
}

namespace {

class Runner {
 public:
  Runner(const Scenario& s, std::uint64_t seed, bool testMode) : s_(s), engine_(build(s), seed, options(testMode)) {
    for (std::size_t i = 0; i < s.actors.size(); ++i) {
      ids_[s.actors[i].name] = AccountId{static_cast<std::uint32_t>(i)};
      if (s.actors[i].role == ActorRole::Provider) behaviors_.set(AccountId{static_cast<std::uint32_t>(i)}, s.actors[i].behavior);
    }
    engine_.set_observer(&behaviors_);
  }

  ScenarioRun run() {
    for (const auto& st : s_.script) {
      engine_.advance_time(st.at);
      try {
        execute(st);
      } catch (const Error& e) {
        if (e.code() == Errc::InvariantViolation) throw;
        ++rejected_;
      }
    }
    engine_.advance_time(s_.duration);
    engine_.note("advance_time", Json{{"to", s_.duration}});
    ScenarioRun out;
    out.events = engine_.events();
    out.stats = engine_.stats();
    out.finalState = snapshot_json(engine_.state());
    out.rejected = rejected_ + behaviors_.rejectedRequests;
    return out;
  }

 private:
  static NetworkState build(const Scenario& s) {
    std::map<AccountId, Tokens> balances;
    for (std::size_t i = 0; i < s.actors.size(); ++i)
      balances[AccountId{static_cast<std::uint32_t>(i)}] = s.actors[i].balance;
    return init_network(s.params, s.fees, balances);
  }

  static EngineOptions options(bool testMode) {
    EngineOptions o;
    o.testMode = testMode;
    o.recordEvents = true;
    o.keepTombstones = testMode;
    return o;
  }

  SectorRef sector(const std::string& ref) const {
    const auto colon = ref.rfind(':');
    const AccountId owner = ids_.at(ref.substr(0, colon));
    return SectorRef{owner, static_cast<std::uint32_t>(std::stoul(ref.substr(colon + 1)))};
  }

  FileId file(const std::string& label) const {
    auto it = files_.find(label);
    // A label whose file_add was rejected refers to no file.
    return it == files_.end() ? FileId{0} : it->second;
  }

  void execute(const ScriptStep& st) {
    const auto actor = [&] { return ids_.at(st.actor); };
    if (st.op == "file_add") {
      const FileId id = engine_.file_add(actor(), st.size, st.value, digest_for(st));
      if (!st.label.empty()) files_[st.label] = id;
    } else if (st.op == "file_discard") {
      engine_.file_discard(actor(), file(st.file));
    } else if (st.op == "file_get") {
      engine_.file_get(actor(), file(st.file));
    } else if (st.op == "file_confirm") {
      engine_.file_confirm(actor(), file(st.file), st.index, sector(st.sector));
    } else if (st.op == "file_prove") {
      const Tick t = st.proofTimeSet ? st.proofTime : engine_.state().clock;
      engine_.file_prove(actor(), file(st.file), st.index, sector(st.sector), Proof{t, st.valid});
    } else if (st.op == "sector_register") {
      engine_.sector_register(actor(), st.capacity);
    } else if (st.op == "sector_disable") {
      engine_.sector_disable(actor(), sector(st.sector));
    } else if (st.op == "corrupt") {
      std::vector<SectorRef> refs;
      for (const auto& r : st.sectors) refs.push_back(sector(r));
      engine_.corrupt_sectors(refs);
    } else if (st.op == "set_behavior") {
      behaviors_.set(actor(), st.behavior);
      engine_.note("set_behavior", Json{{"provider", actor().value}, {"behavior", to_string(st.behavior.kind)},
                                        {"every", st.behavior.every}});
    } else if (st.op == "settle_losses") {
      engine_.settle_losses();
    }
  }

  static Digest digest_for(const ScriptStep& st) {
    Digest d{};
    // FNV-1a: std::hash is not stable across standard libraries.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : st.label) h = (h ^ ch) * 0x100000001b3ULL;
    h = splitmix64(h ^ st.size);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i % 8 == 0) h = splitmix64(h + i);
      d[i] = static_cast<std::uint8_t>(h >> (8 * (i % 8)));
    }
    return d;
  }

  const Scenario& s_;
  Engine engine_;
  ProviderBehaviors behaviors_;
  std::map<std::string, AccountId> ids_;
  std::map<std::string, FileId> files_;
  std::uint64_t rejected_ = 0;
};

}  // namespace

ScenarioRun run_scenario(const Scenario& s, std::uint64_t seed, bool testMode) {
  validate_scenario(s);
  return Runner(s, seed, testMode).run();
}

void write_event_log(std::ostream& out, const std::vector<EngineEvent>& events) {
  for (const auto& e : events) out << to_json(e).dump() << '\n';
}

std::string event_log_text(const std::vector<EngineEvent>& events) {
  std::ostringstream out;
  write_event_log(out, events);
  return out.str();
}

}  // namespace fileinsurer
