#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace marlbench::reporting {

struct ReportOptions {
  std::string input_dir;   // scanned recursively for runs.json files
  std::string out_dir;     // receives curves/profile/aggregates svg+csv
  std::string conf_root;   // task parameters for the baseline evaluator
  int n_resamples = 2000;
  double confidence = 0.95;
  std::vector<double> taus;  // empty: 0, 0.05, ..., 1.0
  std::uint64_t seed = 0;
  int baseline_episodes = 200;
  int baseline_max_steps = 200;
};

// Merge every runs.json under input_dir, normalize final returns against the
// random-policy baseline, and emit the three plot/CSV pairs.
void generate_report(const ReportOptions& options);

}  // namespace marlbench::reporting
