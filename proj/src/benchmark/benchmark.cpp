#include "marlbench/benchmark/benchmark.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "marlbench/algorithms/descriptor.hpp"
#include "marlbench/core/errors.hpp"
#include "marlbench/experiment/experiment.hpp"

namespace marlbench::benchmark {

namespace fs = std::filesystem;

Expansion expand(const BenchmarkPlan& plan) {
  if (plan.algorithms.empty() || plan.tasks.empty() || plan.models.empty() || plan.seeds.empty())
    throw ConfigError("benchmark: every axis (algorithms, tasks, models, seeds) must be non-empty");

  auto algorithms = plan.algorithms;
  auto tasks = plan.tasks;
  auto models = plan.models;
  auto seeds = plan.seeds;
  std::sort(algorithms.begin(), algorithms.end());
  std::sort(tasks.begin(), tasks.end());
  std::sort(models.begin(), models.end());
  std::sort(seeds.begin(), seeds.end());

  Expansion out;
  for (const auto& algo : algorithms) {
    for (const auto& task : tasks) {
      // compatibility gate once per (algorithm, task) pair
      try {
        const auto& desc = algorithms::descriptor_for(algo);
        const auto task_id = envs::parse_task_id(task);
        envs::TaskDef probe = envs::make_task(task_id, task_id.base == "matrix_climb" ? 2 : 3,
                                              task_id.base == "matrix_climb" ? 1 : 100, 0.1, 1.0);
        algorithms::match_compatibility(desc, probe);
      } catch (const std::invalid_argument& e) {
        out.exclusions.push_back({algo, task, e.what()});
        continue;
      }
      for (const auto& model : models) {
        for (const auto seed : seeds) {
          PlannedExperiment exp;
          exp.algorithm = algo;
          exp.task = task;
          exp.model = model;
          exp.seed = seed;
          exp.name = experiment::Experiment::run_dir_name(algo, task, model, seed);
          exp.run_dir = (fs::path(plan.out_root) / exp.name).string();

          config::ConfigSources sources;
          sources.conf_root = plan.conf_root;
          sources.algorithm = algo;
          sources.task = task;
          sources.model = model;
          sources.user_files = plan.user_files;
          sources.overrides = plan.overrides;
          sources.overrides.push_back("seed=" + std::to_string(seed));
          exp.bundle = config::load_config(sources);
          out.experiments.push_back(std::move(exp));
        }
      }
    }
  }
  return out;
}

namespace {

// Run one experiment to completion; returns an error message or empty.
std::string run_one(const PlannedExperiment& exp) {
  try {
    experiment::Experiment run(exp.bundle, exp.run_dir);
    run.run();
    return {};
  } catch (const std::exception& e) {
    return e.what();
  }
}

void note_failure(const PlannedExperiment& exp, const std::string& error) {
  std::error_code ec;
  fs::create_directories(exp.run_dir, ec);
  std::ofstream file(exp.run_dir + "/error.txt", std::ios::trunc);
  file << error << "\n";
}

Summary execute_sequential(const Expansion& expansion) {
  Summary summary;
  summary.excluded = expansion.exclusions;
  for (const auto& exp : expansion.experiments) {
    const std::string error = run_one(exp);
    if (error.empty()) {
      summary.completed.push_back({exp.name, true, ""});
    } else {
      note_failure(exp, error);
      summary.failed.push_back({exp.name, false, error});
    }
  }
  return summary;
}

Summary execute_pool(const Expansion& expansion, int workers) {
  Summary summary;
  summary.excluded = expansion.exclusions;
  std::map<pid_t, std::size_t> running;
  std::size_t next = 0;
  const std::size_t total = expansion.experiments.size();

  auto spawn = [&](std::size_t idx) {
    std::cout.flush();
    std::cerr.flush();
    const pid_t pid = fork();
    if (pid < 0) throw RuntimeFailure("benchmark: fork failed");
    if (pid == 0) {
      const std::string error = run_one(expansion.experiments[idx]);
      if (!error.empty()) {
        note_failure(expansion.experiments[idx], error);
        _exit(2);
      }
      _exit(0);
    }
    running[pid] = idx;
  };

  while (next < total || !running.empty()) {
    while (next < total && static_cast<int>(running.size()) < workers) spawn(next++);
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid < 0) throw RuntimeFailure("benchmark: waitpid failed");
    const auto it = running.find(pid);
    if (it == running.end()) continue;
    const auto& exp = expansion.experiments[it->second];
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    if (ok) {
      summary.completed.push_back({exp.name, true, ""});
    } else {
      std::string error = "experiment process exited with status " +
                          std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1);
      std::ifstream err_file(exp.run_dir + "/error.txt");
      if (err_file) {
        std::string text((std::istreambuf_iterator<char>(err_file)), std::istreambuf_iterator<char>());
        while (!text.empty() && text.back() == '\n') text.pop_back();
        if (!text.empty()) error = text;
      }
      summary.failed.push_back({exp.name, false, error});
    }
    running.erase(it);
  }
  // deterministic summary order regardless of completion order
  auto by_name = [](const RunOutcome& a, const RunOutcome& b) { return a.name < b.name; };
  std::sort(summary.completed.begin(), summary.completed.end(), by_name);
  std::sort(summary.failed.begin(), summary.failed.end(), by_name);
  return summary;
}

}  // namespace

Summary execute(const BenchmarkPlan& plan, const Expansion& expansion) {
  if (plan.backend == Backend::Sequential) return execute_sequential(expansion);
  if (plan.workers < 1) throw ConfigError("benchmark: worker_pool needs at least one worker");
  return execute_pool(expansion, plan.workers);
}

void write_summary_json(const std::string& path, const Summary& summary) {
  nlohmann::json doc;
  doc["completed"] = nlohmann::json::array();
  for (const auto& r : summary.completed) doc["completed"].push_back(r.name);
  doc["failed"] = nlohmann::json::array();
  for (const auto& r : summary.failed) doc["failed"].push_back({{"name", r.name}, {"error", r.error}});
  doc["excluded"] = nlohmann::json::array();
  for (const auto& e : summary.excluded)
    doc["excluded"].push_back({{"algorithm", e.algorithm}, {"task", e.task}, {"reason", e.reason}});
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot write " + path);
  file << doc.dump(2) << "\n";
}

}  // namespace marlbench::benchmark
