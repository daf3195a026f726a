// fileinsurer: simulate scenarios, run attacks, evaluate bounds and
// experiments, and run the verification suite.

#include "fileinsurer/adversary.hpp"
#include "fileinsurer/bounds.hpp"
#include "fileinsurer/checks.hpp"
#include "fileinsurer/experiments.hpp"
#include "fileinsurer/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

using namespace fileinsurer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInvariant = 3;

bool test_mode_from_env() {
  const char* v = std::getenv("FILEINSURER_TEST_MODE");
  return v && std::string(v) == "1";
}

int report_error(const Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  return e.code() == Errc::InvariantViolation ? kExitInvariant : kExitValidation;
}

std::string tok(Tokens t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9f", t.tokens());
  return buf;
}

struct SimulateArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out;
  std::string snapshot;
  bool json = false;
};

int cmd_simulate(const SimulateArgs& a) {
  try {
    const Scenario s = load_scenario(a.scenario);
    const ScenarioRun run = run_scenario(s, a.seed, test_mode_from_env());
    if (!a.out.empty()) {
      std::ofstream out(a.out, std::ios::binary);
      if (!out) throw Error(Errc::ValidationError, "cannot write " + a.out);
      write_event_log(out, run.events);
    }
    if (!a.snapshot.empty()) {
      std::ofstream snap(a.snapshot, std::ios::binary);
      snap << run.finalState.dump(2) << "\n";
    }
    const auto& st = run.stats;
    if (a.json) {
      Json j = to_json(st);
      j["events"] = run.events.size();
      j["rejected"] = run.rejected;
      std::cout << j.dump() << "\n";
    } else {
      std::cout << "events            " << run.events.size() << " (" << run.rejected << " rejected requests)\n"
                << "files             added " << st.filesAdded << ", stored " << st.filesStored << ", upload failures "
                << st.uploadFailures << ", discarded " << st.filesDiscarded << ", lost " << st.filesLost << "\n"
                << "refresh           relocations " << st.relocations << ", confirmed " << st.refreshConfirmed
                << ", failed " << st.refreshFailed << ", collisions " << st.collisions << "\n"
                << "enforcement       penalties " << st.penalties << " (" << tok(st.penaltiesBurned)
                << " burned), confiscations " << st.confiscations << " (" << tok(st.confiscated) << ")\n"
                << "compensation      paid " << tok(st.compensationPaid) << ", shortfall "
                << tok(st.compensationShortfall) << ", under-compensated files " << st.underCompensations << "\n"
                << "token flows       rent " << tok(st.rentCharged) << " (distributed " << tok(st.rentDistributed)
                << "), gas " << tok(st.gasBurned) << ", traffic " << tok(st.trafficPaid) << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

struct AttackArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
  unsigned threads = 1;
  std::optional<double> lambda;
  std::string strategy;
  std::optional<std::uint64_t> trials;
};

int cmd_attack(const AttackArgs& a) {
  try {
    const Scenario s = load_scenario(a.scenario);
    if (!s.attack.present) throw Error(Errc::ValidationError, "scenario has no attack section");
    AttackSection at = s.attack;
    at.setup.testMode = test_mode_from_env();
    if (a.lambda) at.lambda = *a.lambda;
    if (a.trials) at.trials = *a.trials;
    if (!a.strategy.empty()) {
      const auto st = parse_attack_strategy(a.strategy);
      if (!st) throw Error(Errc::ValidationError, "unknown strategy " + a.strategy);
      at.strategy = *st;
    }
    std::vector<AttackReport> reports(at.trials);
    const unsigned threads = std::max(1u, std::min<unsigned>(a.threads, static_cast<unsigned>(at.trials)));
    std::vector<std::string> errors(threads);
    auto work = [&](unsigned w) {
      try {
        for (std::uint64_t t = w; t < at.trials; t += threads)
          reports[t] = run_attack_trial(at.setup, at.lambda, at.strategy, child_seed(a.seed, t));
      } catch (const std::exception& e) {
        errors[w] = e.what();
      }
    };
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 1; w < threads; ++w) pool.emplace_back(work, w);
      work(0);
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw Error(Errc::ValidationError, e);
    }
    std::ofstream file;
    std::ostream* stream = nullptr;
    if (!a.out.empty()) {
      file.open(a.out, std::ios::binary);
      stream = &file;
    } else if (a.json) {
      stream = &std::cout;
    }
    double maxGamma = 0, sumGamma = 0;
    std::uint64_t failures = 0;
    for (const auto& r : reports) {
      if (stream) *stream << to_json(r).dump() << "\n";
      maxGamma = std::max(maxGamma, r.gammaLost);
      sumGamma += r.gammaLost;
      failures += !r.fullyCompensated;
    }
    const double mean = reports.empty() ? 0 : sumGamma / static_cast<double>(reports.size());
    if (a.json) {
      Json j;
      j["trials"] = at.trials;
      j["lambda"] = at.lambda;
      j["strategy"] = to_string(at.strategy);
      j["maxGammaLost"] = maxGamma;
      j["meanGammaLost"] = mean;
      j["compensationFailures"] = failures;
      std::cout << j.dump() << "\n";
    } else {
      std::printf("trials %llu  lambda %.3f  strategy %s\n", static_cast<unsigned long long>(at.trials), at.lambda,
                  std::string(to_string(at.strategy)).c_str());
      std::printf("gammaLost max %.6f  mean %.6f\n", maxGamma, mean);
      std::printf("trials with under-compensation %llu\n", static_cast<unsigned long long>(failures));
    }
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

int cmd_bounds(const BoundInputs& in, double ratio, bool json) {
  try {
    const auto t3 = thm3_robustness_bound(in);
    const auto t4 = thm4_deposit_ratio(in);
    const double cap = thm1_capacity_bound(in);
    const double t2 = thm2_collision_bound(in.Ns, ratio);
    if (json) {
      Json j;
      j["inputs"] = {{"k", in.k}, {"Ns", in.Ns}, {"capPara", in.capPara}, {"lambda", in.lambda}, {"c", in.c},
                     {"gammaVm", in.gammaVm}, {"r1", in.r1}, {"r2", in.r2}, {"minCapacity", in.minCapacity}};
      j["capacityBound"] = cap;
      j["collisionBound"] = {{"capacityOverFileSize", ratio}, {"bound", t2}, {"logBound", thm2_log_bound(in.Ns, ratio)}};
      j["robustness"] = {{"first", t3.first},
                         {"second", t3.second},
                         {"third", t3.third},
                         {"bound", t3.bound},
                         {"shortcutThird", t3.shortcutThird},
                         {"discrepancy", t3.discrepancy}};
      j["depositRatio"] = {{"first", t4.first}, {"second", t4.second}, {"third", t4.third}, {"bound", t4.bound}};
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
    std::printf("inputs: k=%g N_s=%g capPara=%g lambda=%g c=%g gamma_v^m=%g r1=%g r2=%g\n", in.k, in.Ns, in.capPara,
                in.lambda, in.c, in.gammaVm, in.r1, in.r2);
    std::printf("%-26s %s\n", "bound", "value");
    std::printf("%-26s %.6g bytes\n", "storable size", cap);
    std::printf("%-26s %.4g  (capacity/size = %g, log = %.4f)\n", "collision probability", t2, ratio,
                thm2_log_bound(in.Ns, ratio));
    std::printf("%-26s %.4g\n", "lost value fraction", t3.bound);
    std::printf("  %-24s %.4g\n", "5 lambda^k", t3.first);
    std::printf("  %-24s %.4g\n", "lambda^(k/2)", t3.second);
    std::printf("  %-24s %.4g\n", "third term (formula)", t3.third);
    std::printf("  %-24s %.4g%s\n", "third term (5e-6/g_v^m)", t3.shortcutThird,
                t3.discrepancy ? "   <-- DISCREPANCY: the shortcut does not follow from the formula" : "");
    std::printf("%-26s %.4g\n", "deposit ratio", t4.bound);
    std::printf("  %-24s %.4g\n", "5 lambda^(k-1)", t4.first);
    std::printf("  %-24s %.4g\n", "lambda^(k/2-1)", t4.second);
    std::printf("  %-24s %.4g\n", "third term", t4.third);
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

struct Table3Args {
  std::vector<std::uint64_t> ncp{100000};
  std::vector<std::uint32_t> ns{20};
  std::string dist = "all";
  std::string mode = "both";
  std::uint32_t trials = 100;
  std::uint64_t seed = 20220101;
  double capacityFactor = 2.0;
  unsigned threads = 1;
  bool json = false;
};

int cmd_table3(const Table3Args& a) {
  try {
    if (a.ncp.size() != a.ns.size()) throw Error(Errc::ValidationError, "--ncp and --ns need the same count");
    std::vector<SizeDist> dists;
    if (a.dist == "all") {
      dists.assign(std::begin(kAllSizeDists), std::end(kAllSizeDists));
    } else if (auto d = parse_size_dist(a.dist)) {
      dists.push_back(*d);
    } else {
      throw Error(Errc::ValidationError, "unknown distribution " + a.dist);
    }
    std::vector<Table3Mode> modes;
    if (a.mode == "both") {
      modes = {Table3Mode::Reallocate, Table3Mode::Refresh};
    } else if (auto m = parse_table3_mode(a.mode)) {
      modes.push_back(*m);
    } else {
      throw Error(Errc::ValidationError, "unknown mode " + a.mode);
    }
    Json rows = Json::array();
    for (auto mode : modes) {
      if (!a.json) {
        std::printf("%s\n%-10s %-6s", std::string(to_string(mode)).c_str(), "N_cp", "N_s");
        for (auto d : dists) std::printf(" %15s", std::string(to_string(d)).c_str());
        std::printf("\n");
      }
      for (std::size_t i = 0; i < a.ncp.size(); ++i) {
        if (!a.json) std::printf("%-10llu %-6u", static_cast<unsigned long long>(a.ncp[i]), a.ns[i]);
        for (auto d : dists) {
          ExperimentConfig c;
          c.Ncp = a.ncp[i];
          c.Ns = a.ns[i];
          c.dist = d;
          c.mode = mode;
          c.trials = a.trials;
          c.seed = a.seed;
          c.capacityFactor = a.capacityFactor;
          c.threads = a.threads;
          const auto r = run_table3(c);
          if (a.json) {
            rows.push_back({{"mode", to_string(mode)}, {"Ncp", c.Ncp}, {"Ns", c.Ns}, {"dist", to_string(d)},
                            {"trials", c.trials}, {"maxUsage", r.maxUsage}, {"collisions", r.collisions}});
          } else {
            std::printf(" %15.3f", r.maxUsage);
            std::fflush(stdout);
          }
        }
        if (!a.json) std::printf("\n");
      }
    }
    if (a.json) std::cout << rows.dump(2) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

int cmd_verify(const CheckOptions& opt, bool json) {
  Json lines = Json::array();
  int unexpected = 0;
  const auto& known = documented_unattainable();
  run_all_checks(opt, [&](const CheckResult& r) {
    const bool documented = std::find(known.begin(), known.end(), r.id) != known.end();
    if (r.pass == documented) ++unexpected;
    if (json) {
      lines.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail},
                       {"seconds", r.seconds}});
    } else {
      std::printf("[%s] %2d %s: %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(), r.detail.c_str(),
                  r.seconds);
      std::fflush(stdout);
    }
  });
  if (json) std::cout << lines.dump(2) << "\n";
  return unexpected == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FileInsurer protocol simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its event log");
  simulate->add_option("--scenario", sim.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--out", sim.out, "Event log (JSON Lines)");
  simulate->add_option("--snapshot", sim.snapshot, "Final state snapshot (JSON)");
  simulate->add_flag("--json", sim.json, "Machine-readable summary");

  AttackArgs att;
  auto* attack = app.add_subcommand("attack", "Run adversary trials from a scenario's attack section");
  attack->add_option("--scenario", att.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  attack->add_option("--seed", att.seed, "Master seed; trial t uses child seed t");
  attack->add_option("--out", att.out, "Per-trial reports (JSON Lines)");
  attack->add_option("--lambda", att.lambda, "Corrupted capacity fraction");
  attack->add_option("--strategy", att.strategy, "random | greedy | exhaustive");
  attack->add_option("--trials", att.trials, "Number of trials");
  attack->add_option("--threads", att.threads, "Worker threads");
  attack->add_flag("--json", att.json, "Machine-readable output");

  BoundInputs in;
  bool boundsJson = false;
  double ratio = 1000;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the capacity, collision, robustness and deposit bounds");
  bounds->add_option("--k", in.k, "Replicas per minValue");
  bounds->add_option("--ns", in.Ns, "Number of sectors");
  bounds->add_option("--cappara", in.capPara, "N_v^m / N_s");
  bounds->add_option("--lambda", in.lambda, "Corrupted capacity fraction");
  bounds->add_option("--c", in.c, "Security parameter");
  bounds->add_option("--gammavm", in.gammaVm, "N_v / N_v^m");
  bounds->add_option("--r1", in.r1, "Size-weighted mean value / minValue");
  bounds->add_option("--r2", in.r2, "Value density ratio");
  bounds->add_option("--mincap", in.minCapacity, "minCapacity in bytes");
  bounds->add_option("--ratio", ratio, "s.capacity / f.size for the collision bound");
  bounds->add_flag("--json", boundsJson, "Machine-readable output");

  Table3Args t3;
  auto* experiment = app.add_subcommand("experiment", "Experiments");
  experiment->require_subcommand(1);
  auto* table3 = experiment->add_subcommand("table3", "Maximum capacity usage of sectors");
  table3->add_option("--ncp", t3.ncp, "Backup counts (one per row)");
  table3->add_option("--ns", t3.ns, "Sector counts (one per row)");
  table3->add_option("--dist", t3.dist, "all | uniform01 | uniform12 | exponential | normalMuEqVar | normalMuEq2Var");
  table3->add_option("--mode", t3.mode, "both | reallocate | refresh");
  table3->add_option("--trials", t3.trials, "Trials per cell");
  table3->add_option("--seed", t3.seed, "RNG seed");
  table3->add_option("--capacity-factor", t3.capacityFactor, "Total capacity / total backup size");
  table3->add_option("--threads", t3.threads, "Worker threads");
  table3->add_flag("--json", t3.json, "Machine-readable output");

  CheckOptions vopt;
  std::string scenarioDir = "scenarios";
  bool verifyJson = false, quick = false;
  auto* verify = app.add_subcommand("verify", "Run the invariant and acceptance suite");
  verify->add_option("--scenarios", scenarioDir, "Directory of replay scenarios");
  verify->add_option("--threads", vopt.threads, "Worker threads");
  verify->add_flag("--quick", quick, "Fewer adversary trials");
  verify->add_flag("--json", verifyJson, "Machine-readable output");

  CLI11_PARSE(app, argc, argv);

  if (*simulate) return cmd_simulate(sim);
  if (*attack) return cmd_attack(att);
  if (*bounds) return cmd_bounds(in, ratio, boundsJson);
  if (*table3) return cmd_table3(t3);
  if (*verify) {
    vopt.scenarioDir = scenarioDir;
    if (quick) vopt.fullCompensationTrials = 50;
    return cmd_verify(vopt, verifyJson);
  }
  return kExitOk;
}
