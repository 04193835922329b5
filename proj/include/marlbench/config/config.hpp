#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "marlbench/algorithms/hyperparams.hpp"
#include "marlbench/config/schema.hpp"
#include "marlbench/envs/env.hpp"
#include "marlbench/models/model.hpp"

namespace marlbench::config {

// A validated leaf value.
struct ConfigValue {
  LeafType type = LeafType::Float;
  std::int64_t i = 0;
  double f = 0.0;
  bool b = false;
  std::string s;
  std::vector<std::int64_t> il;

  bool operator==(const ConfigValue& o) const {
    return type == o.type && i == o.i && f == o.f && b == o.b && s == o.s && il == o.il;
  }

  std::string str() const;
};

// Fully resolved, type-checked configuration: dotted key -> value, in
// deterministic key order.
using ConfigTree = std::map<std::string, ConfigValue>;

struct ExperimentSettings {
  std::int64_t total_frames = 0;
  int frames_per_iteration = 0;
  int n_vector_envs = 1;
  int eval_interval = 1;
  int eval_episodes = 1;
  int max_eval_steps = 1;
  std::int64_t checkpoint_interval = 0;
  int off_policy_train_steps = 0;  // resolved: gradient steps per iteration
  bool share_params_actor = true;
  bool share_params_critic = true;
  bool obs_norm = false;
  double reward_scale = 1.0;
};

// Lazy blueprint bundle: pure data, comparable and serializable; nothing is
// instantiated until an experiment runs.
struct RunBundle {
  std::uint64_t seed = 0;
  std::string algo_name;
  std::string task_id;
  std::string model_name;
  ExperimentSettings experiment;
  algorithms::AlgoHyperparams hp;
  models::ModelConfig model;
  envs::TaskDef task;
  ConfigTree tree;

  bool operator==(const RunBundle& o) const { return tree == o.tree; }
};

struct ConfigSources {
  std::string conf_root;                  // directory holding the default YAML files
  std::string algorithm;                  // e.g. "mappo"
  std::string task;                       // e.g. "desk/navigate-discrete"
  std::string model = "mlp";              // e.g. "mlp"
  std::vector<std::string> user_files;    // optional overlay YAML paths
  std::vector<std::string> overrides;     // "dotted.key=value" / "key=[a,b]"
};

// Load defaults < user files < overrides, validate every leaf before
// anything is constructed, resolve the auto values (anneal_frames,
// off_policy_train_steps) and produce the lazy bundle.
RunBundle load_config(const ConfigSources& sources);

// Rebuild a bundle from a resolved tree (snapshot reload, checkpoints).
RunBundle bundle_from_tree(const ConfigTree& tree);

// Resolve the conf directory: $MARLBENCH_CONF, else ./conf.
std::string default_conf_root();

void write_snapshot(const ConfigTree& tree, const std::string& path);
ConfigTree parse_snapshot(const std::string& path);
std::string snapshot_string(const ConfigTree& tree);
ConfigTree parse_snapshot_string(const std::string& text);

// Parse one override token "key=value" into (key, raw tokens).
std::pair<std::string, std::vector<std::string>> parse_override(const std::string& token);

}  // namespace marlbench::config
