#pragma once

#include <map>
#include <string>
#include <vector>

namespace momentlab::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Quick property checks across all modules (`momentlab check`). Each check
/// runs on small instances; tolerances come from the named table.
std::vector<CheckResult> run_invariant_suite(const std::map<std::string, double>& tolerances);

}  // namespace momentlab::cli
