#pragma once

#include <functional>
#include <string>
#include <vector>

namespace reactnav::tools {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast property checks on small synthetic problems.
std::vector<CheckResult> run_property_checks();

}  // namespace reactnav::tools
