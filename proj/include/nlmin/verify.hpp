#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nlmin {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string measured;
  std::string expected;
  double seconds = 0.0;
  double budget = 0.0;
};

struct VerifyOptions {
  std::optional<std::string> only;  // criterion name or number
  bool force_failure = false;       // test hook: K_2 replaced by 0.4
};

/// Names accepted by VerifyOptions::only, in criterion order.
const std::vector<std::string>& criterion_names();

/// Runs the acceptance criteria, printing one line per criterion to `out`.
std::vector<CriterionResult> run_verify(const VerifyOptions& opts, std::ostream& out);

}  // namespace nlmin
