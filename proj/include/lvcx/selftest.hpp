#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lvcx {

struct SelftestOptions {
  std::uint64_t seed = 42;
  /// Overrides every stochastic path/sample count (under-powered runs).
  std::optional<std::size_t> paths;
  unsigned workers = 1;
  /// Restrict to these criterion ids; empty runs all.
  std::vector<int> only;
};

struct CriterionInfo {
  int id;
  std::string name;
  std::string summary;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  /// Supplementary diagnostics are reported but never decide the verdict.
  bool supplementary = false;
  std::string observed;
  std::string tolerance;
  std::string hint;
  double seconds = 0.0;
};

const std::vector<CriterionInfo>& selftest_criteria();

/// Runs the acceptance criteria in order; `on_result` (if set) sees each
/// result as soon as it is available.
std::vector<CriterionResult> run_selftest(
    const SelftestOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS|FAIL  [id] name: observed (tolerance: ...) -- hint"; supplementary
/// results print INFO (held) or WARN (did not hold).
std::string format_result(const CriterionResult& r);

}  // namespace lvcx
