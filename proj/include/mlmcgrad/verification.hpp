#pragma once

#include <string>
#include <vector>

// Named verification suites: each check re-derives an analytic claim
// (unbiasedness by full level enumeration, optimality of the level
// distributions, variance closed forms, decay-regime predictions, exact bit
// accounting, variance-vs-workers scaling) and reports measured vs expected.

namespace mlmc::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // measured vs expected values
};

using Suite = std::vector<CheckResult>;

std::vector<std::string> suite_names();

// Throws std::invalid_argument for an unknown suite name.
Suite run_suite(const std::string& name);

bool all_passed(const Suite& suite);

std::string format_suite(const std::string& name, const Suite& suite);

// Slower end-to-end checks used by the acceptance harness, not exposed as
// verify suites.
Suite convergence_checks();
Suite bias_demo_checks();
Suite determinism_checks();

}  // namespace mlmc::verify
