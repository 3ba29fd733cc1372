#pragma once

// The twelve acceptance criteria. Each check computes its own inputs and
// returns a verdict with the measured numbers.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perbbm/env.hpp"
#include "perbbm/parallel.hpp"

namespace perbbm::acceptance {

struct Result {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string summary;
  nlohmann::json metrics = nlohmann::json::object();
  double seconds = 0.0;
  double budget_seconds = 0.0;

  nlohmann::json to_json() const;
  /// "PASS C1 classical-constants: ... (0.01 s of 1 s)".
  std::string line() const;
};

enum class Suite { fast, full };

struct Options {
  std::uint64_t seed = 20'240'611;
  Exec exec = Exec::parallel;
  /// Replaces the periodic branching-rate environment used by the criteria.
  std::optional<std::string> env_override_path;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  bool fast;
};

const std::vector<Criterion>& criteria();
std::vector<int> suite_ids(Suite s);

class Runner {
 public:
  explicit Runner(Options opt);
  ~Runner();
  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;

  /// Never throws; an exception inside a check is reported as a failure.
  Result run(int id);
  std::vector<Result> run_all(const std::vector<int>& ids, const std::function<void(const Result&)>& on_result = {});

 private:
  struct State;
  std::unique_ptr<State> state_;
};

nlohmann::json report(const std::vector<Result>& results, Suite suite);

}  // namespace perbbm::acceptance
