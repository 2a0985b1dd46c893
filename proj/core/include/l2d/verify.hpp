#pragma once

#include <string>
#include <vector>

namespace l2d {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // counterexample or summary statistics
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_pass() const;
  std::string to_json() const;
};

/// Names of every registered invariant check, in execution order.
std::vector<std::string> verify_check_names();

/// Runs the invariant and theorem-level checks whose names contain the
/// selector as a substring ("all" runs everything). Checks never throw;
/// violations, including expected-rejection paths that fail to reject, are
/// reported as failed entries with the offending input named.
VerifyReport run_verify(const std::string& selector);

}  // namespace l2d
