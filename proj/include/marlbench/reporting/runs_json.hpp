#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace marlbench::reporting {

inline constexpr int kRunsSchemaVersion = 1;

struct EvalPoint {
  std::int64_t step_count = 0;       // frames collected when evaluated
  std::vector<double> returns;       // per-episode evaluation returns
};

// Evaluation history of one (environment, algorithm, task, seed) run.
struct RunRecord {
  std::string environment;
  std::string algorithm;
  std::string task;
  std::string run_id;                // "seed_<K>"
  std::vector<EvalPoint> points;
  std::vector<double> absolute_metrics;  // final-performance per-episode returns

  bool operator==(const RunRecord& o) const = default;
};

// Serialize records into the interchange document:
//   {"schema_version": 1,
//    env: {algo: {task: {run_id: {step_k: {step_count, metrics:{return:[..]}},
//                                 "absolute_metrics": {...}}}}}}
// Runs of one (algorithm, task) must share the same step grid.
std::string emit_runs_document(const std::vector<RunRecord>& records);

std::vector<RunRecord> parse_runs_document(const std::string& json_text);

void write_runs_json(const std::string& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_runs_json(const std::string& path);

}  // namespace marlbench::reporting
