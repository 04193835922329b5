#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "marlbench/config/config.hpp"

namespace marlbench::benchmark {

enum class Backend { Sequential, WorkerPool };

// A cartesian collection of experiments sharing hyperparameters.
struct BenchmarkPlan {
  std::vector<std::string> algorithms;
  std::vector<std::string> tasks;
  std::vector<std::string> models;
  std::vector<std::uint64_t> seeds;
  std::string conf_root;
  std::vector<std::string> user_files;
  std::vector<std::string> overrides;  // shared hyperparameters
  std::string out_root;
  Backend backend = Backend::Sequential;
  int workers = 1;
};

struct PlannedExperiment {
  std::string algorithm, task, model;
  std::uint64_t seed = 0;
  std::string name;     // <algo>_<task>_<model>/seed_<k>
  std::string run_dir;  // out_root/name
  config::RunBundle bundle;
};

struct Exclusion {
  std::string algorithm, task, reason;
};

struct Expansion {
  std::vector<PlannedExperiment> experiments;  // lexicographic (algorithm, task, model, seed)
  std::vector<Exclusion> exclusions;
};

// Expand the cartesian product, dropping incompatible (algorithm, task)
// pairs with a recorded reason. Every included bundle is fully validated
// here, before anything runs.
Expansion expand(const BenchmarkPlan& plan);

struct RunOutcome {
  std::string name;
  bool ok = false;
  std::string error;
};

struct Summary {
  std::vector<RunOutcome> completed;
  std::vector<RunOutcome> failed;
  std::vector<Exclusion> excluded;

  bool all_ok() const { return failed.empty(); }
};

// Run the plan on the chosen backend. Failures are isolated per experiment;
// the worker pool uses OS processes, so per-run outputs are byte-identical
// to a sequential execution.
Summary execute(const BenchmarkPlan& plan, const Expansion& expansion);

void write_summary_json(const std::string& path, const Summary& summary);

}  // namespace marlbench::benchmark
