#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fileinsurer {

struct CheckResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct CheckOptions {
  std::filesystem::path scenarioDir = "scenarios";
  unsigned threads = 1;
  std::uint64_t fullCompensationTrials = 1000;
  std::uint64_t oracleInstances = 100;
};

/// Published maximum-capacity-usage cells at desk scale.
struct Table3Cell {
  const char* mode;
  std::uint64_t Ncp;
  std::uint32_t Ns;
  const char* dist;
  double expected;
};
const std::vector<Table3Cell>& table3_reference();

CheckResult check_deposit_example();
CheckResult check_robustness_example();
CheckResult check_collision_example();
CheckResult check_table3(const CheckOptions& opt);
CheckResult check_kl_grid();
CheckResult check_stirling_sweep();
CheckResult check_adversary_oracle(const CheckOptions& opt);
CheckResult check_full_compensation(const CheckOptions& opt);
CheckResult check_conformance();
CheckResult check_determinism(const CheckOptions& opt);

/// Every check in criterion order; `progress` sees each result as it lands.
std::vector<CheckResult> run_all_checks(const CheckOptions& opt,
                                        const std::function<void(const CheckResult&)>& progress = {});

/// Criteria whose statement is false as written; see README.
const std::vector<int>& documented_unattainable();

/// Branch name -> failure messages (empty when the branch behaved).
struct BranchOutcome {
  std::string branch;
  std::vector<std::string> failures;
};
std::vector<BranchOutcome> run_conformance_branches();

}  // namespace fileinsurer
