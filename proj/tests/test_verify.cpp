#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>

#include "skfi/errors.hpp"
#include "skfi/verify.hpp"

using namespace skfi;

TEST_CASE("suite registry") {
  const auto& names = suite_names();
  for (const char* n : {"parisi-oracle", "cw-oracle", "enumeration-vs-mc", "derivative-identity",
                        "replica-inequality", "gg-trend", "ultrametric-trend", "positivity-trend",
                        "magnetization-overlap", "region-thm", "manifest-replay"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  }
  try {
    run_suite("no-such-suite");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("parisi-oracle") != std::string::npos);
  }
  CHECK_THROWS_AS(run_suite("cw-oracle", VerifyOptions{1, 0.0}), ConfigError);
}

TEST_CASE("quick suites pass") {
  for (const char* n : {"cw-oracle", "parisi-oracle", "sk-high-temp", "manifest-replay"}) {
    const SuiteReport r = run_suite(n);
    CHECK_MESSAGE(r.pass, n);
    CHECK(r.seconds <= r.runtime_limit);
  }
  const SuiteReport p = run_suite("parisi-oracle");
  for (const CheckResult& c : p.checks) {
    if (c.name.rfind("max_abs_error", 0) == 0) CHECK(c.value <= 1e-8);
  }
}

TEST_CASE("replica inequality suite at reduced scale") {
  const SuiteReport r = run_suite("replica-inequality", VerifyOptions{7, 0.01});
  CHECK(r.pass);
  const nlohmann::json j = to_json(r);
  CHECK(j.at("suite") == "replica-inequality");
  CHECK(j.at("checks").is_array());
  CHECK(j.at("measurements").at("random_tuples") == 10000);
  bool found = false;
  for (const auto& c : j.at("checks")) {
    if (c.at("name") == "violations") {
      found = true;
      CHECK(c.at("value") == 0.0);
    }
  }
  CHECK(found);
}
