#pragma once

#include <string>
#include <vector>

namespace dikd {

struct SuiteEntry {
  std::string op;
  int instances = 0;
  double max_rel_err = 0.0;
  bool ok(double tol) const { return max_rel_err < tol; }
};

// Central-difference verification of every differentiable operation and of a
// small end-to-end model, run in double precision with eps=1e-3.
// `instances` random cases per operation.
std::vector<SuiteEntry> run_gradcheck_suite(int instances = 20,
                                            uint64_t seed = 7);

}  // namespace dikd
