// Runs every acceptance criterion and prints one line per criterion.
// Exit status 1 when any criterion fails.

#include <cstdio>

#include "perbbm/acceptance.hpp"

int main() {
  using namespace perbbm::acceptance;
  Runner runner(Options{});
  const auto results = runner.run_all(suite_ids(Suite::full), [](const Result& r) {
    std::printf("%s\n", r.line().c_str());
    std::fflush(stdout);
  });
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
