#pragma once

#include "fileinsurer/adversary.hpp"
#include "fileinsurer/behavior.hpp"
#include "fileinsurer/engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fileinsurer {

inline constexpr int kScenarioVersion = 1;

enum class ActorRole { Client, Provider };

struct Actor {
  std::string name;
  ActorRole role = ActorRole::Client;
  Tokens balance;
  Behavior behavior;
};

/// One timeline entry. Which fields matter depends on `op`.
struct ScriptStep {
  Tick at = 0;
  std::string op;
  std::string actor;
  Bytes size = 0;
  Bytes capacity = 0;
  Tokens value;
  std::string label;                // file_add: name for later steps
  std::string file;                 // label of an earlier file_add
  std::uint32_t index = 0;
  std::string sector;               // "provider:id"
  std::vector<std::string> sectors; // corrupt
  Tick proofTime = 0;
  bool proofTimeSet = false;
  bool valid = true;
  Behavior behavior;
  int line = 0;
};

struct AttackSection {
  bool present = false;
  AttackSetup setup;
  double lambda = 0.5;
  AttackStrategy strategy = AttackStrategy::Random;
  std::uint64_t trials = 1;
};

struct Scenario {
  int version = 0;
  NetworkParams params;
  FeeSchedule fees;
  std::vector<Actor> actors;
  std::vector<ScriptStep> script;
  Tick duration = 0;
  AttackSection attack;
};

/// Throws ParseError ("line L, column C: ...") for malformed text or wrong
/// field types and ValidationError naming the first violated rule.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Throws ValidationError.
void validate_scenario(const Scenario& s);

struct ScenarioRun {
  std::vector<EngineEvent> events;
  EngineStats stats;
  Json finalState;
  std::uint64_t rejected = 0;
};

/// Executes the script and advances to `duration`. Rejected requests are
/// logged and the run continues; InvariantViolation propagates.
ScenarioRun run_scenario(const Scenario& s, std::uint64_t seed, bool testMode);

/// One JSON object per line.
void write_event_log(std::ostream& out, const std::vector<EngineEvent>& events);
std::string event_log_text(const std::vector<EngineEvent>& events);

}  // namespace fileinsurer
