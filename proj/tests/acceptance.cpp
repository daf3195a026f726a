// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is 0 when the failing set is exactly the documented one.

#include "fileinsurer/checks.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <set>
#include <string>
#include <thread>

#ifndef FILEINSURER_SCENARIO_DIR
#define FILEINSURER_SCENARIO_DIR "scenarios"
#endif

int main(int argc, char** argv) {
  fileinsurer::CheckOptions opt;
  opt.scenarioDir = FILEINSURER_SCENARIO_DIR;
  opt.threads = std::max(1u, std::thread::hardware_concurrency());
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--scenarios") == 0 && i + 1 < argc) {
      opt.scenarioDir = argv[++i];
    } else if (std::strcmp(argv[i], "--trials") == 0 && i + 1 < argc) {
      opt.fullCompensationTrials = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: %s [--scenarios DIR] [--trials N]\n", argv[0]);
      return 2;
    }
  }

  std::set<int> failed;
  fileinsurer::run_all_checks(opt, [&](const fileinsurer::CheckResult& r) {
    std::printf("%s criterion %d: %s | %s | %.2fs\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
                r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    if (!r.pass) failed.insert(r.id);
  });

  const auto& known = fileinsurer::documented_unattainable();
  const std::set<int> expected(known.begin(), known.end());
  std::printf("%zu/10 criteria pass", 10 - failed.size());
  if (!expected.empty()) {
    std::printf("; documented as unattainable:");
    for (int id : expected) std::printf(" %d", id);
  }
  std::printf("\n");
  if (failed != expected) {
    std::printf("unexpected outcome set\n");
    return 1;
  }
  return 0;
}
