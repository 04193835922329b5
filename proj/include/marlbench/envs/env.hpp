#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "marlbench/envs/domain_spec.hpp"
#include "marlbench/numeric/rng.hpp"

namespace marlbench::envs {

enum class ActionVariant { Continuous, Discrete };
enum class RewardMode { Independent, Shared };

inline std::string variant_str(ActionVariant v) {
  return v == ActionVariant::Continuous ? "continuous" : "discrete";
}

// A concrete scenario: which built-in dynamics to run plus its constants.
struct TaskDef {
  std::string name;             // e.g. "navigate"
  std::string env_name = "desk";
  std::string id;               // full selection id, e.g. "desk/navigate-discrete"
  int n_agents = 2;
  int horizon = 100;
  RewardMode reward_mode = RewardMode::Independent;
  bool offers_continuous = true;
  bool offers_discrete = true;
  bool masked = false;
  double dt = 0.1;
  double world_bound = 1.0;
  std::vector<std::vector<double>> payoff;  // matrix games: payoff[a0][a1]

  static TaskDef navigate(int n_agents = 3, int horizon = 100, double dt = 0.1, double world_bound = 1.0);
  static TaskDef spread(int n_agents = 3, int horizon = 100, double dt = 0.1, double world_bound = 1.0);
  static TaskDef matrix_climb(bool masked = false);
  // Generic one-shot matrix game over the given payoff table (two agents).
  static TaskDef matrix_game(std::string name, std::vector<std::vector<double>> payoff, bool masked = false);

  void validate() const;
};

// Task ids follow "env/task[-discrete][-masked]".
struct TaskId {
  std::string base;        // "navigate" | "spread" | "matrix_climb"
  bool force_discrete = false;
  bool masked = false;
  std::string full;
};

TaskId parse_task_id(const std::string& id);

// Build the TaskDef for a parsed id with the given knobs applied.
TaskDef make_task(const TaskId& id, int n_agents, int horizon, double dt, double world_bound);

// Batched per-group experience for one vectorized step.
struct GroupStep {
  std::vector<float> obs;                  // [B, n, d_obs]
  std::vector<float> next_obs;             // [B, n, d_obs]
  std::vector<float> action;               // [B, n, d_act] (continuous variants)
  std::vector<std::int64_t> action_index;  // [B, n] (discrete variants)
  std::vector<float> reward;               // [B, n]
  std::vector<float> action_mask;          // [B, n, A] 0/1; empty when not maskable
  std::vector<float> next_action_mask;     // [B, n, A]
};

struct StepBatch {
  std::vector<GroupStep> groups;           // ordered like VectorEnv::group_specs()
  std::vector<std::uint8_t> done;          // [B], per environment
  std::vector<float> global_state;         // [B, d_state]; empty when absent
  std::vector<float> next_global_state;    // [B, d_state]
  std::vector<float> episode_return;       // [B], running mean-over-agents return
};

struct GroupActions {
  std::vector<float> continuous;           // [B, n, d_act]
  std::vector<std::int64_t> discrete;      // [B, n]
};
using Actions = std::vector<GroupActions>;

// B independent instances of one task stepped in lockstep. Episodes that end
// report their terminal observation in next_obs and auto-reset before the
// following step. Per-environment randomness is seeded as seed + batch index
// through a counter-based split, so a width-B instance is exactly equivalent
// to B width-1 instances.
class VectorEnv {
 public:
  virtual ~VectorEnv() = default;

  const TaskDef& task() const { return task_; }
  ActionVariant variant() const { return variant_; }
  int batch_size() const { return batch_; }
  const std::vector<GroupSpec>& group_specs() const { return groups_; }
  bool has_global_state() const { return !groups_.empty() && groups_[0].has_global_state; }

  // Observations for the next action selection; applies pending auto-resets.
  const std::vector<float>& current_obs(std::size_t group);
  // Legal-action mask aligned with current_obs; empty when not maskable.
  const std::vector<float>& current_mask(std::size_t group);
  const std::vector<float>& current_state();

  StepBatch step(const Actions& actions);

  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);

  // Completed-episode returns (mean over agents of per-agent episode return)
  // harvested since the last call.
  std::vector<float> drain_completed_returns();

 protected:
  VectorEnv(TaskDef task, ActionVariant variant, int batch, std::uint64_t seed);

  virtual void reset_env(int b) = 0;
  // Advance env b with its slice of actions; fill per-agent rewards.
  virtual void advance_env(int b, const Actions& actions, float* rewards) = 0;
  virtual void write_obs(int b, float* out) const = 0;
  virtual void write_state(int b, float* out) const {}
  virtual void write_mask(int b, float* out) const;
  virtual void save_task_state(std::ostream& os) const = 0;
  virtual void load_task_state(std::istream& is) = 0;

  void apply_pending_resets();
  void rebuild_row(int b);

  TaskDef task_;
  ActionVariant variant_;
  int batch_ = 1;
  int n_agents_ = 1;
  int d_obs_ = 0;
  int d_state_ = 0;
  int n_actions_ = 0;  // discrete variants
  int d_act_ = 0;      // continuous variants
  std::vector<GroupSpec> groups_;
  std::vector<num::RngStream> env_rngs_;
  std::vector<int> t_;
  std::vector<std::uint8_t> needs_reset_;
  std::vector<float> ep_return_;
  std::vector<float> obs_;    // [B, n, d_obs]
  std::vector<float> mask_;   // [B, n, A]
  std::vector<float> state_;  // [B, d_state]
  std::vector<float> completed_returns_;
};

std::unique_ptr<VectorEnv> make_env(const TaskDef& task, ActionVariant variant, int batch,
                                    std::uint64_t seed);

// Construction counter used to verify configuration laziness.
long env_construction_count();

}  // namespace marlbench::envs
