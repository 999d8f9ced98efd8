// Runs every acceptance criterion and prints one line per criterion.
// Exit status is nonzero when any criterion fails.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "starlab/verification.hpp"

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  int failed = 0, ran = 0;
  for (int id = 1; id <= starlab::kCriterionCount; ++id) {
    if (only && id != only) continue;
    const starlab::CriterionResult r = starlab::run_criterion(id);
    std::printf("%s\n", starlab::format_result(r).c_str());
    std::fflush(stdout);
    ++ran;
    if (!r.passed) ++failed;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 && ran > 0 ? 0 : 1;
}
