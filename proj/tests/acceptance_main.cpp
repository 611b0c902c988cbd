// Acceptance gate: runs every acceptance criterion and prints one
// pass/fail line each.  Exit 0 iff all pass, 4 otherwise.
#include <cstdio>

#include "kmslab/acceptance.hpp"
#include "kmslab/errors.hpp"

int main() {
  bool all_pass = true;
  for (const auto& r : kmslab::run_acceptance()) {
    all_pass = all_pass && r.pass;
    std::printf("criterion %2d %-32s %s  (value %.3g, tol %.3g) %s\n", r.id,
                r.name.c_str(), r.pass ? "PASS" : "FAIL", r.value,
                r.tolerance, r.detail.c_str());
  }
  return all_pass ? kmslab::exit_ok : kmslab::exit_check_failure;
}
