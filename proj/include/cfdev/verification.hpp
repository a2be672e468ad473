#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfdev/numeric.hpp"
#include "cfdev/report.hpp"

namespace cfdev {

enum class CheckStatus { pass, fail, skip };

std::string to_string(CheckStatus status);

struct CheckResult {
  int id = 0;
  std::string name;
  CheckStatus status = CheckStatus::skip;
  std::string measured;
  std::string bound;
  std::string tolerance;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  std::size_t count(CheckStatus status) const;
  bool ok() const { return count(CheckStatus::fail) == 0; }
};

enum class VerifyLevel { quick, full };

VerifyLevel parse_verify_level(const std::string& text);
std::string to_string(VerifyLevel level);

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::quick;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  unsigned precision_bits = kWorkingPrecision;
  /// Called after each check, e.g. for progress output.
  std::function<void(const CheckResult&)> on_result;
};

inline constexpr int kCheckCount = 12;

/// Names of checks 1..12, in order.
const std::vector<std::string>& check_names();
/// Whether a check runs at the quick level (otherwise it is reported as skipped).
bool runs_at_quick_level(int id);

/// Runs every check once, in order.
VerificationReport run_verification(const VerifyOptions& options);
/// Runs one check (1..12) regardless of level.
CheckResult run_check(int id, const VerifyOptions& options);

Report verification_report(const VerificationReport& report, const VerifyOptions& options);

/// Sum of |I| over level-n cylinders with q_n <= limit, found from the reduced
/// fractions p/q with q <= limit: each has exactly two expansions and every
/// level-n prefix arises from the one of length n.
Rational farey_level_mass(unsigned n, std::uint64_t limit);

}  // namespace cfdev
