#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "marlbench/algorithms/algorithm.hpp"
#include "marlbench/config/config.hpp"
#include "marlbench/envs/env.hpp"
#include "marlbench/envs/transforms.hpp"
#include "marlbench/experiment/rng_streams.hpp"
#include "marlbench/reporting/runs_json.hpp"

namespace marlbench::experiment {

// Control surface handed to callbacks: the only sanctioned way to mutate a
// running experiment.
class ExperimentControl {
 public:
  void freeze_group(const std::string& name) { frozen_[name] = true; }
  void unfreeze_group(const std::string& name) { frozen_[name] = false; }
  bool is_frozen(const std::string& name) const {
    auto it = frozen_.find(name);
    return it != frozen_.end() && it->second;
  }

 private:
  std::map<std::string, bool> frozen_;
};

struct CallbackView {
  std::int64_t iteration = 0;
  std::int64_t frames = 0;
  const algorithms::LossReport* losses = nullptr;          // training events
  const std::vector<double>* eval_returns = nullptr;       // evaluation events, per group
};

using CallbackFn = std::function<void(const CallbackView&, ExperimentControl&)>;

struct Callbacks {
  CallbackFn on_setup;
  CallbackFn on_batch_collected;
  CallbackFn on_train_step;
  CallbackFn on_train_end;
  CallbackFn on_evaluation_end;
};

// Deterministic evaluation-style rollout of an arbitrary policy function.
struct EvalResult {
  std::vector<std::vector<double>> per_episode_returns;  // per group: [episodes], mean over agents
  std::vector<double> mean_return;                       // per group
  std::vector<std::vector<double>> per_agent_return;     // per group: [n], mean over episodes
  std::vector<int> episode_lengths;                      // [episodes]
};

using PolicyFn = std::function<envs::Actions(const std::vector<std::vector<float>>& obs,
                                             const std::vector<std::vector<float>>& masks, int B)>;

EvalResult evaluate_policy(const PolicyFn& policy, const envs::TaskDef& task, envs::ActionVariant variant,
                           int episodes, int max_steps, std::uint64_t seed,
                           envs::TransformPipeline* frozen_transforms = nullptr);

// Uniform-random policy baseline on the task's given variant.
EvalResult random_policy_eval(const envs::TaskDef& task, envs::ActionVariant variant, int episodes,
                              int max_steps, std::uint64_t seed);

// One training run: fixed algorithm, task, model and seed, iterating
// collection -> buffer/staging -> updates -> periodic evaluation, with
// metrics, runs.json, snapshot and checkpoints written under run_dir.
class Experiment {
 public:
  Experiment(config::RunBundle bundle, std::string run_dir, Callbacks callbacks = {});
  ~Experiment();

  // Full training loop from the current counters to total_frames.
  void run();

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  // Additional frames for a resumed run (extends total_frames).
  void extend_total_frames(std::int64_t additional);

  EvalResult evaluate_now(int episodes, std::uint64_t eval_seed);

  const config::RunBundle& bundle() const { return bundle_; }
  const std::string& run_dir() const { return run_dir_; }
  std::int64_t iteration() const { return iteration_; }
  std::int64_t frames() const { return frames_; }
  std::int64_t total_iterations() const;
  const algorithms::Algorithm& algorithm() const { return *algo_; }
  envs::ActionVariant variant() const { return variant_; }
  std::int64_t buffer_size(std::size_t group) const { return algo_->buffer_size(group); }

  // Name of the directory holding a run: <algo>_<task>_<model> with '/'
  // sanitized, plus seed_<K> below it.
  static std::string run_dir_name(const std::string& algo, const std::string& task_id,
                                  const std::string& model, std::uint64_t seed);

 private:
  void collect_iteration();
  void emit_metrics_row(const algorithms::LossReport& losses, const std::vector<double>* eval_returns);
  std::vector<double> run_evaluation();
  void write_runs_file() const;
  void check_losses_finite(const algorithms::LossReport& losses) const;

  config::RunBundle bundle_;
  std::string run_dir_;
  Callbacks callbacks_;
  ExperimentControl control_;

  envs::ActionVariant variant_;
  std::unique_ptr<envs::VectorEnv> env_;
  envs::TransformPipeline transforms_;
  std::unique_ptr<algorithms::Algorithm> algo_;
  num::RngStream collection_rng_;
  num::RngStream buffer_rng_;

  std::int64_t iteration_ = 0;
  std::int64_t frames_ = 0;
  reporting::RunRecord record_;
  bool metrics_header_written_ = false;
};

}  // namespace marlbench::experiment
