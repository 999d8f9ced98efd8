#pragma once

// The acceptance suite: twelve numbered checks covering the profiles, the
// expansion law, the phase plane, the PDE solvers and the functionals.
// Shared by the command-line verify scenario and the acceptance test.

#include <string>
#include <vector>

namespace starlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;   // measured numbers, one line
  double seconds = 0.0; // wall time of the check
};

inline constexpr int kCriterionCount = 12;

// Runs one criterion (1..12). Exceptions from the library are caught and
// reported as failures with the error text in detail.
CriterionResult run_criterion(int id);

std::vector<CriterionResult> run_acceptance();

// "PASS  3 expansion trichotomy (0.41 s): ..." style line.
std::string format_result(const CriterionResult& r);

}  // namespace starlab
