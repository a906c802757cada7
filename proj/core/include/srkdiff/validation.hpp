#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace srkdiff {

struct CheckLine {
  std::string name;
  bool pass = false;
  double measured = 0;   // worst observed value
  double threshold = 0;  // pass iff measured <= threshold
};

struct ValidationOptions {
  // Fault-injection hook for the test harness: scales zeta2 before the
  // identity checks. 1.0 means no fault.
  double zeta2_scale = 1.0;
};

/// Cross-module invariant battery (coefficient identities, limit recovery,
/// crossover continuity, exponential-integrator algebra, PSD of the joint
/// noise covariance, projection contraction, drift-form equivalence).
std::vector<CheckLine> run_validation_suite(const ValidationOptions& options = {});

nlohmann::json to_json(const std::vector<CheckLine>& lines);

}  // namespace srkdiff
