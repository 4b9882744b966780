#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace trires::cli {

struct SuiteResult {
  std::string name;
  int passed = 0;
  int total = 0;
  std::vector<std::string> failures;

  bool ok() const { return passed == total; }
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int otsu_histograms = 200;
  int sampler_tiles = 200;
  bool end_to_end_gradients = true;
  // Operation whose backward rule is deliberately corrupted for the run.
  std::string inject_fault;
};

// Property suites: gradients vs finite differences, Otsu vs exhaustive
// exact search, sampler label soundness and balance, freeze contract.
std::vector<SuiteResult> run_verification(const VerifyOptions& options);

void print_verification(std::ostream& out, const std::vector<SuiteResult>& results);

}  // namespace trires::cli
