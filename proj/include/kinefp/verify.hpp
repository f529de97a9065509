#pragma once

#include <string>
#include <vector>

namespace kinefp {

struct VerifyRow {
  std::string suite;
  std::string name;   // includes the identity/bound label being checked
  double margin = 0;  // tolerance - error, or rhs - lhs; >= 0 passes
  bool pass = false;
  std::string detail;
};

/// Runs one of the named invariant suites (kernels, linfp, taf,
/// vintegrals, bounds) or "all". Throws std::invalid_argument for an
/// unknown suite name.
std::vector<VerifyRow> run_verify_suite(const std::string& suite);

}  // namespace kinefp
