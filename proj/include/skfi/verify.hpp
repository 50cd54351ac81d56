#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace skfi {

struct VerifyOptions {
  std::uint64_t seed = 20240611ULL;
  /// Multiplies disorder counts and sweep lengths (1 = full size). Values
  /// below 1 give quick smoke runs whose verdicts are not authoritative.
  double scale = 1.0;
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  bool pass = false;
  double seconds = 0.0;
  double runtime_limit = 0.0;
  std::vector<CheckResult> checks;
  nlohmann::json measurements = nlohmann::json::object();
};

nlohmann::json to_json(const SuiteReport& r);

/// Available suite names in a fixed order.
const std::vector<std::string>& suite_names();

/// Runs one named suite. Throws ConfigError for an unknown name (the message
/// lists the available suites). A suite passes when every check passes and
/// the runtime limit is met.
SuiteReport run_suite(const std::string& name, const VerifyOptions& options = {});

}  // namespace skfi
