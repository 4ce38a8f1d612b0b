#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dqsg/config.hpp"

namespace dqsg {

struct CriterionResult {
  std::string id;  // "A1" .. "A13"
  std::string description;
  double measured = 0.0;
  std::string threshold;  // e.g. "< 0.01" or "in [-0.65, -0.35]"
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs every acceptance criterion at the scale of cfg.validate_preset and the
// model/disorder of cfg where a criterion follows the config. A criterion
// that throws is recorded as a failure and the suite carries on. Each row is
// echoed to `progress` as it finishes.
std::vector<CriterionResult> validate_suite(const ExperimentConfig& cfg,
                                            std::ostream* progress = nullptr);

// One line per criterion: "A3 PASS measured=... threshold=... (12.3 s) detail".
std::string format_row(const CriterionResult& r);
std::string format_table(const std::vector<CriterionResult>& rows);

}  // namespace dqsg
