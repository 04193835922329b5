#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "marlbench/algorithms/descriptor.hpp"
#include "marlbench/algorithms/hyperparams.hpp"
#include "marlbench/envs/env.hpp"
#include "marlbench/models/model.hpp"
#include "marlbench/numeric/optim.hpp"
#include "marlbench/numeric/rng.hpp"

namespace marlbench::algorithms {

using num::Adam;
using num::Param;
using num::RngStream;
using num::Tensor;

struct LossReport {
  std::vector<std::pair<std::string, double>> entries;  // stable order and names
};

struct ActOutput {
  envs::Actions actions;
  std::vector<std::vector<float>> log_probs;  // per group, [B*n]; on-policy only
};

struct AlgoContext {
  AlgoDescriptor desc;
  AlgoHyperparams hp;
  models::ModelConfig model_config;
  bool share_actor = true;
  bool share_critic = true;
  std::vector<envs::GroupSpec> groups;
  envs::ActionVariant variant = envs::ActionVariant::Continuous;
  int d_state = 0;  // 0 when the task provides no global state
  int n_envs = 1;
  int frames_per_iteration = 0;
  int off_policy_train_steps = 0;  // gradient steps per iteration (resolved)
};

// A training strategy: behavior/evaluation policies, experience handling and
// the per-iteration update schedule, over independently trained groups.
class Algorithm {
 public:
  virtual ~Algorithm() = default;

  const AlgoContext& ctx() const { return ctx_; }

  // Behavior policy with exploration. obs/masks are per-group buffers laid
  // out [B, n, d]; state is [B, d_state] or empty.
  virtual ActOutput act(const std::vector<std::vector<float>>& obs,
                        const std::vector<std::vector<float>>& masks, const std::vector<float>& state,
                        int B, std::int64_t frames_done, RngStream& rng) = 0;

  // Deterministic policy used by evaluation.
  virtual envs::Actions act_eval(const std::vector<std::vector<float>>& obs,
                                 const std::vector<std::vector<float>>& masks, int B) = 0;

  // Store or stage one collected step.
  virtual void observe(const envs::StepBatch& batch, const ActOutput& aout) = 0;

  // Run the update schedule. Frozen groups are skipped entirely.
  virtual LossReport train(std::int64_t frames_done, RngStream& sample_rng,
                           const std::vector<bool>& frozen) = 0;

  // Stable loss-column names, in report order.
  virtual std::vector<std::string> loss_names() const = 0;

  virtual std::int64_t buffer_size(std::size_t /*group*/) const { return 0; }

  // Every learnable/target tensor, for checkpoint tests and diagnostics.
  virtual std::vector<Param> named_parameters() const = 0;

  virtual void save(std::ostream& os) const = 0;
  virtual void load(std::istream& is) = 0;

 protected:
  explicit Algorithm(AlgoContext ctx) : ctx_(std::move(ctx)) {}
  AlgoContext ctx_;
};

std::unique_ptr<Algorithm> make_algorithm(const AlgoContext& ctx, RngStream& init_rng);

// ---- shared plumbing ------------------------------------------------------------

// Feature width of one critic input row: the global state (or the
// concatenation of all observations) for full-observability critics, the
// agent's own observation otherwise.
int critic_obs_dim(bool full_obs, int n_agents, int d_obs, int d_state);

// Build [B, n, dg] critic rows from a [B, n, d_obs] observation buffer.
std::vector<float> critic_obs_rows(const std::vector<float>& obs, const std::vector<float>& state, int B,
                                   int n, int d_obs, int d_state, bool full_obs);

// Tile all agents' actions into every row: [B, n, n*d_act].
std::vector<float> tile_joint_actions(const std::vector<float>& actions, int B, int n, int d_act);

// Concatenate per-row feature blocks a [rows, da] and b [rows, db].
std::vector<float> append_features(const std::vector<float>& a, int da, const std::vector<float>& b, int db,
                                   std::size_t rows);

// Parameter (de)serialization by name with shape checks.
void save_params(std::ostream& os, const std::vector<Param>& params);
void load_params(std::istream& is, const std::vector<Param>& params);
void save_adam(std::ostream& os, const Adam& opt);
void load_adam(std::istream& is, Adam& opt);

// target <- tau * online + (1 - tau) * target over parameter lists.
void soft_update_params(const std::vector<Param>& online, const std::vector<Param>& target, double tau);

}  // namespace marlbench::algorithms
