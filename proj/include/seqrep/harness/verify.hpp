#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "seqrep/harness/config.hpp"

namespace seqrep::harness {

struct CheckResult {
  std::string name;
  bool passed;
  Json measured;
  std::string tolerance;
};

struct VerificationReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
  Json to_json() const;
};

/// "taylor", "oracle", "gradcheck", "all".
std::vector<std::string> verification_suites();

/// Throws UsageError for unknown suite names.
VerificationReport run_verification(std::string_view suite);

}  // namespace seqrep::harness
