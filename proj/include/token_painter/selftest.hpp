#pragma once

#include <string>
#include <vector>

namespace tp {

struct SelftestOptions {
  // Added to every fast-transform output before it is compared with the
  // direct DFT; lets the harness prove it can fail.
  double fft_perturbation = 0.0;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SuiteResult> run_selftest(const SelftestOptions& options = {});

}  // namespace tp
