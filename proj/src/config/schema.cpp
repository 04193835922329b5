#include "marlbench/config/schema.hpp"

#include <algorithm>
#include <cmath>

namespace marlbench::config {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SchemaLeaf leaf_int(std::string key, double min, std::string doc) {
  SchemaLeaf l;
  l.key = std::move(key);
  l.type = LeafType::Int;
  l.min = min;
  l.doc = std::move(doc);
  return l;
}

SchemaLeaf leaf_float(std::string key, double min, double max, bool min_ex, bool max_ex, std::string doc) {
  SchemaLeaf l;
  l.key = std::move(key);
  l.type = LeafType::Float;
  l.min = min;
  l.max = max;
  l.min_exclusive = min_ex;
  l.max_exclusive = max_ex;
  l.doc = std::move(doc);
  return l;
}

SchemaLeaf leaf_bool(std::string key, std::string doc) {
  SchemaLeaf l;
  l.key = std::move(key);
  l.type = LeafType::Bool;
  l.doc = std::move(doc);
  return l;
}

SchemaLeaf leaf_string(std::string key, std::vector<std::string> choices, std::string doc) {
  SchemaLeaf l;
  l.key = std::move(key);
  l.type = LeafType::String;
  l.choices = std::move(choices);
  l.doc = std::move(doc);
  return l;
}

SchemaLeaf leaf_int_list(std::string key, double min, std::string doc) {
  SchemaLeaf l;
  l.key = std::move(key);
  l.type = LeafType::IntList;
  l.min = min;
  l.doc = std::move(doc);
  return l;
}

std::vector<SchemaLeaf> build_schema() {
  std::vector<SchemaLeaf> s;
  s.push_back(leaf_int("seed", 0, "experiment seed"));

  s.push_back(leaf_int("experiment.total_frames", 1, "environment frames to collect in total"));
  s.push_back(leaf_int("experiment.frames_per_iteration", 1,
                       "frames collected per iteration; must be a multiple of n_vector_envs"));
  s.push_back(leaf_int("experiment.n_vector_envs", 1, "batched environment copies used for collection"));
  s.push_back(leaf_int("experiment.eval_interval", 1, "evaluate every this many iterations"));
  s.push_back(leaf_int("experiment.eval_episodes", 1, "episodes per evaluation"));
  s.push_back(leaf_int("experiment.max_eval_steps", 1, "step cap per evaluation episode"));
  s.push_back(leaf_int("experiment.checkpoint_interval", 0,
                       "write a checkpoint every this many iterations (0: final only)"));
  s.push_back(leaf_int("experiment.off_policy_train_steps", 0,
                       "off-policy gradient steps per iteration (0: one per collected frame)"));
  s.push_back(leaf_bool("experiment.share_params_actor", "one actor parameter set per group"));
  s.push_back(leaf_bool("experiment.share_params_critic", "one critic parameter set per group"));
  s.push_back(leaf_bool("experiment.obs_norm", "running-statistics observation normalization"));
  s.push_back(leaf_float("experiment.reward_scale", -kInf, kInf, false, false,
                         "constant reward scaling transform (non-zero)"));

  s.push_back(leaf_string("algorithm.name",
                          {"mappo", "ippo", "maddpg", "iddpg", "masac", "isac", "qmix", "vdn", "iql"},
                          "training algorithm"));
  s.push_back(leaf_float("algorithm.gamma", 0.0, 1.0, true, false, "discount factor"));
  s.push_back(leaf_float("algorithm.gae_lambda", 0.0, 1.0, false, false, "advantage estimation lambda"));
  s.push_back(leaf_float("algorithm.ppo_clip", 0.0, kInf, true, false, "surrogate clip width"));
  s.push_back(leaf_float("algorithm.entropy_coef", 0.0, kInf, false, false, "entropy bonus weight"));
  s.push_back(leaf_float("algorithm.tau", 0.0, 1.0, true, false, "target network soft-update coefficient"));
  s.push_back(leaf_float("algorithm.sac_alpha", 0.0, kInf, true, false, "fixed entropy temperature"));
  s.push_back(leaf_float("algorithm.epsilon_start", 0.0, 1.0, false, false, "initial exploration rate"));
  s.push_back(leaf_float("algorithm.epsilon_end", 0.0, 1.0, false, false, "final exploration rate"));
  s.push_back(leaf_int("algorithm.anneal_frames", 0,
                       "frames to anneal epsilon over (0: half of total_frames)"));
  s.push_back(leaf_float("algorithm.lr", 0.0, kInf, true, false, "learning rate"));
  s.push_back(leaf_int("algorithm.minibatches", 1, "on-policy minibatches per epoch"));
  s.push_back(leaf_int("algorithm.epochs", 1, "on-policy epochs per iteration"));
  s.push_back(leaf_int("algorithm.target_update_period", 1, "gradient steps between target soft updates"));
  s.push_back(leaf_float("algorithm.ddpg_sigma", 0.0, kInf, false, false, "exploration noise scale"));
  s.push_back(leaf_int("algorithm.buffer_capacity", 1, "replay capacity in transitions per group"));
  s.push_back(leaf_int("algorithm.batch_size", 1, "off-policy sample size per gradient step"));
  s.push_back(leaf_float("algorithm.grad_clip", 0.0, kInf, false, false,
                         "global gradient-norm bound (0: off)"));

  s.push_back(leaf_string("task.id", {}, "task selection, e.g. desk/navigate[-discrete][-masked]"));
  s.push_back(leaf_int("task.n_agents", 1, "agents in the group"));
  s.push_back(leaf_int("task.horizon", 1, "episode length"));
  s.push_back(leaf_float("task.dt", 0.0, kInf, true, false, "kinematic step size"));
  s.push_back(leaf_float("task.world_bound", 0.0, kInf, true, false, "half-width of the square world"));

  s.push_back(leaf_string("model.name", {"mlp", "deepsets"}, "model blueprint selection"));
  s.push_back(leaf_string("model.kind", {"mlp", "deepsets"}, "network family"));
  s.push_back(leaf_int_list("model.layer_widths", 1, "hidden widths of the mlp"));
  s.push_back(leaf_string("model.activation", {"tanh", "relu"}, "hidden activation"));
  s.push_back(leaf_int_list("model.phi_widths", 1, "deepsets per-element network widths"));
  s.push_back(leaf_int_list("model.rho_widths", 1, "deepsets aggregate network widths"));
  return s;
}

}  // namespace

std::string SchemaLeaf::type_str() const {
  switch (type) {
    case LeafType::Int: return "int";
    case LeafType::Float: return "float";
    case LeafType::Bool: return "bool";
    case LeafType::String: return "string";
    case LeafType::IntList: return "int list";
  }
  return "?";
}

std::string SchemaLeaf::range_str() const {
  if (type == LeafType::Bool) return "true|false";
  if (type == LeafType::String) {
    if (choices.empty()) return "-";
    std::string out;
    for (const auto& c : choices) out += (out.empty() ? "" : "|") + c;
    return out;
  }
  const bool no_min = std::isinf(min) && min < 0;
  const bool no_max = std::isinf(max) && max > 0;
  if (no_min && no_max) return "-";
  std::string lo = no_min ? "-inf" : (min == static_cast<std::int64_t>(min)
                                          ? std::to_string(static_cast<std::int64_t>(min))
                                          : std::to_string(min));
  std::string hi = no_max ? "inf" : (max == static_cast<std::int64_t>(max)
                                         ? std::to_string(static_cast<std::int64_t>(max))
                                         : std::to_string(max));
  return (min_exclusive ? "(" : "[") + lo + ", " + hi + (max_exclusive || no_max ? ")" : "]");
}

const std::vector<SchemaLeaf>& config_schema() {
  static const std::vector<SchemaLeaf> schema = build_schema();
  return schema;
}

const SchemaLeaf* find_leaf(const std::string& key) {
  for (const auto& l : config_schema())
    if (l.key == key) return &l;
  return nullptr;
}

namespace {
std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}
}  // namespace

std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& l : config_schema()) {
    const std::size_t d = edit_distance(key, l.key);
    if (d < best_d) {
      best_d = d;
      best = l.key;
    }
  }
  return best;
}

}  // namespace marlbench::config
