#include "marlbench/envs/env.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "marlbench/core/binio.hpp"

namespace marlbench::envs {

namespace {
std::atomic<long> g_env_constructions{0};

std::vector<std::string> agent_names(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("agent_" + std::to_string(i));
  return names;
}
}  // namespace

// ---- task definitions --------------------------------------------------------

TaskDef TaskDef::navigate(int n_agents, int horizon, double dt, double world_bound) {
  TaskDef t;
  t.name = "navigate";
  t.id = "desk/navigate";
  t.n_agents = n_agents;
  t.horizon = horizon;
  t.reward_mode = RewardMode::Independent;
  t.offers_continuous = true;
  t.offers_discrete = true;
  t.dt = dt;
  t.world_bound = world_bound;
  t.validate();
  return t;
}

TaskDef TaskDef::spread(int n_agents, int horizon, double dt, double world_bound) {
  TaskDef t;
  t.name = "spread";
  t.id = "desk/spread";
  t.n_agents = n_agents;
  t.horizon = horizon;
  t.reward_mode = RewardMode::Shared;
  t.offers_continuous = true;
  t.offers_discrete = true;
  t.dt = dt;
  t.world_bound = world_bound;
  t.validate();
  return t;
}

TaskDef TaskDef::matrix_game(std::string name, std::vector<std::vector<double>> payoff, bool masked) {
  TaskDef t;
  t.name = std::move(name);
  t.id = "desk/" + t.name;
  t.n_agents = 2;
  t.horizon = 1;
  t.reward_mode = RewardMode::Shared;
  t.offers_continuous = false;
  t.offers_discrete = true;
  t.masked = masked;
  t.payoff = std::move(payoff);
  t.validate();
  return t;
}

TaskDef TaskDef::matrix_climb(bool masked) {
  // Two-player climbing game; the masked variant disallows action 0 for both
  // agents, leaving (1,1) with payoff 7 as the best joint action.
  TaskDef t = matrix_game("matrix_climb", {{11, -30, 0}, {-30, 7, 0}, {0, 6, 5}}, masked);
  if (masked) t.id += "-masked";
  return t;
}

void TaskDef::validate() const {
  if (n_agents < 1) throw std::invalid_argument("task " + name + ": n_agents must be >= 1");
  if (horizon < 1) throw std::invalid_argument("task " + name + ": horizon must be >= 1");
  if (!std::isfinite(dt) || dt <= 0) throw std::invalid_argument("task " + name + ": dt must be positive");
  if (!std::isfinite(world_bound) || world_bound <= 0)
    throw std::invalid_argument("task " + name + ": world_bound must be positive");
  if (!payoff.empty()) {
    for (const auto& row : payoff) {
      if (row.size() != payoff.size()) throw std::invalid_argument("task " + name + ": payoff must be square");
      for (double v : row)
        if (!std::isfinite(v)) throw std::invalid_argument("task " + name + ": payoff entries must be finite");
    }
    if (n_agents != 2) throw std::invalid_argument("task " + name + ": matrix games take exactly 2 agents");
    if (horizon != 1) throw std::invalid_argument("task " + name + ": matrix games are one-shot (horizon 1)");
  }
  if (!offers_continuous && !offers_discrete)
    throw std::invalid_argument("task " + name + ": must offer at least one action variant");
}

TaskId parse_task_id(const std::string& id) {
  TaskId out;
  out.full = id;
  const auto slash = id.find('/');
  if (slash == std::string::npos || id.substr(0, slash) != "desk")
    throw std::invalid_argument("unknown task id '" + id + "': expected desk/<task>[-discrete][-masked]");
  std::string rest = id.substr(slash + 1);
  auto strip_suffix = [&](const std::string& suffix) {
    if (rest.size() >= suffix.size() && rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
      rest = rest.substr(0, rest.size() - suffix.size());
      return true;
    }
    return false;
  };
  out.masked = strip_suffix("-masked");
  out.force_discrete = strip_suffix("-discrete");
  if (!out.masked) out.masked = strip_suffix("-masked");
  out.base = rest;
  if (out.base != "navigate" && out.base != "spread" && out.base != "matrix_climb")
    throw std::invalid_argument("unknown task '" + out.base + "' in id '" + id +
                                "' (built-ins: navigate, spread, matrix_climb)");
  if (out.masked && out.base != "matrix_climb")
    throw std::invalid_argument("task '" + out.base + "' has no masked variant");
  return out;
}

TaskDef make_task(const TaskId& id, int n_agents, int horizon, double dt, double world_bound) {
  TaskDef def;
  if (id.base == "navigate")
    def = TaskDef::navigate(n_agents, horizon, dt, world_bound);
  else if (id.base == "spread")
    def = TaskDef::spread(n_agents, horizon, dt, world_bound);
  else
    def = TaskDef::matrix_climb(id.masked);
  if (id.base == "matrix_climb") {
    if (n_agents != 2)
      throw std::invalid_argument("task matrix_climb: n_agents is fixed at 2, got " + std::to_string(n_agents));
    if (horizon != 1)
      throw std::invalid_argument("task matrix_climb: horizon is fixed at 1, got " + std::to_string(horizon));
  }
  if (id.force_discrete) def.offers_continuous = false;
  def.id = id.full;
  return def;
}

// ---- base vector env -----------------------------------------------------------

VectorEnv::VectorEnv(TaskDef task, ActionVariant variant, int batch, std::uint64_t seed)
    : task_(std::move(task)), variant_(variant), batch_(batch), n_agents_(task_.n_agents) {
  ++g_env_constructions;
  if (batch_ < 1) throw std::invalid_argument("env: batch size must be >= 1");
  if (variant == ActionVariant::Continuous && !task_.offers_continuous)
    throw std::invalid_argument("task " + task_.name + " offers no continuous variant");
  if (variant == ActionVariant::Discrete && !task_.offers_discrete)
    throw std::invalid_argument("task " + task_.name + " offers no discrete variant");
  env_rngs_.reserve(batch_);
  // counter-based split: env b draws from splitmix64(seed + b)
  for (int b = 0; b < batch_; ++b)
    env_rngs_.emplace_back(num::splitmix64(seed + static_cast<std::uint64_t>(b)));
  t_.assign(batch_, 0);
  needs_reset_.assign(batch_, 1);
  ep_return_.assign(batch_, 0.0f);
}

void VectorEnv::rebuild_row(int b) {
  reset_env(b);
  t_[b] = 0;
  ep_return_[b] = 0.0f;
  needs_reset_[b] = 0;
  write_obs(b, obs_.data() + static_cast<std::size_t>(b) * n_agents_ * d_obs_);
  if (d_state_ > 0) write_state(b, state_.data() + static_cast<std::size_t>(b) * d_state_);
  if (n_actions_ > 0 && !mask_.empty())
    write_mask(b, mask_.data() + static_cast<std::size_t>(b) * n_agents_ * n_actions_);
}

void VectorEnv::apply_pending_resets() {
  for (int b = 0; b < batch_; ++b)
    if (needs_reset_[b]) rebuild_row(b);
}

void VectorEnv::write_mask(int b, float* out) const {
  for (int i = 0; i < n_agents_ * n_actions_; ++i) out[i] = 1.0f;
}

const std::vector<float>& VectorEnv::current_obs(std::size_t group) {
  if (group != 0) throw std::invalid_argument("env: unknown group index");
  apply_pending_resets();
  return obs_;
}

const std::vector<float>& VectorEnv::current_mask(std::size_t group) {
  if (group != 0) throw std::invalid_argument("env: unknown group index");
  apply_pending_resets();
  return mask_;
}

const std::vector<float>& VectorEnv::current_state() {
  apply_pending_resets();
  return state_;
}

StepBatch VectorEnv::step(const Actions& actions) {
  apply_pending_resets();
  if (actions.size() != 1) throw std::invalid_argument("env: expected actions for exactly one group");
  const auto& ga = actions[0];

  StepBatch batch;
  batch.groups.resize(1);
  GroupStep& g = batch.groups[0];
  g.obs = obs_;
  if (d_state_ > 0) batch.global_state = state_;
  if (!mask_.empty()) g.action_mask = mask_;

  const std::size_t bn = static_cast<std::size_t>(batch_) * n_agents_;
  if (variant_ == ActionVariant::Continuous) {
    if (ga.continuous.size() != bn * static_cast<std::size_t>(d_act_))
      throw std::invalid_argument("env: continuous action buffer has wrong size");
    g.action = ga.continuous;
  } else {
    if (ga.discrete.size() != bn) throw std::invalid_argument("env: discrete action buffer has wrong size");
    for (std::size_t i = 0; i < bn; ++i) {
      const auto a = ga.discrete[i];
      if (a < 0 || a >= n_actions_)
        throw std::invalid_argument("env: discrete action " + std::to_string(a) + " outside [0, " +
                                    std::to_string(n_actions_) + ")");
      if (!mask_.empty() && mask_[i * n_actions_ + static_cast<std::size_t>(a)] == 0.0f)
        throw std::invalid_argument("env: illegal masked action " + std::to_string(a));
    }
    g.action_index = ga.discrete;
  }

  g.reward.assign(bn, 0.0f);
  batch.done.assign(batch_, 0);
  for (int b = 0; b < batch_; ++b) {
    advance_env(b, actions, g.reward.data() + static_cast<std::size_t>(b) * n_agents_);
    ++t_[b];
    const bool done = t_[b] >= task_.horizon;
    batch.done[b] = done ? 1 : 0;
    float mean_r = 0.0f;
    for (int i = 0; i < n_agents_; ++i) mean_r += g.reward[static_cast<std::size_t>(b) * n_agents_ + i];
    mean_r /= static_cast<float>(n_agents_);
    ep_return_[b] += mean_r;
    if (done) {
      completed_returns_.push_back(ep_return_[b]);
      needs_reset_[b] = 1;
    }
  }

  // terminal observations stay visible in next_obs of the ending step
  for (int b = 0; b < batch_; ++b) {
    write_obs(b, obs_.data() + static_cast<std::size_t>(b) * n_agents_ * d_obs_);
    if (d_state_ > 0) write_state(b, state_.data() + static_cast<std::size_t>(b) * d_state_);
    if (!mask_.empty()) write_mask(b, mask_.data() + static_cast<std::size_t>(b) * n_agents_ * n_actions_);
  }
  g.next_obs = obs_;
  if (d_state_ > 0) batch.next_global_state = state_;
  if (!mask_.empty()) g.next_action_mask = mask_;
  batch.episode_return = ep_return_;
  return batch;
}

std::vector<float> VectorEnv::drain_completed_returns() {
  std::vector<float> out;
  out.swap(completed_returns_);
  return out;
}

void VectorEnv::save_state(std::ostream& os) const {
  binio::write_vec(os, t_);
  binio::write_vec(os, needs_reset_);
  binio::write_vec(os, ep_return_);
  binio::write_vec(os, completed_returns_);
  binio::write_pod<std::uint64_t>(os, env_rngs_.size());
  for (const auto& rng : env_rngs_) binio::write_string(os, rng.serialize());
  save_task_state(os);
}

void VectorEnv::load_state(std::istream& is) {
  t_ = binio::read_vec<int>(is);
  needs_reset_ = binio::read_vec<std::uint8_t>(is);
  ep_return_ = binio::read_vec<float>(is);
  completed_returns_ = binio::read_vec<float>(is);
  const auto n = binio::read_pod<std::uint64_t>(is);
  if (n != env_rngs_.size()) throw std::runtime_error("env state: batch size mismatch");
  for (auto& rng : env_rngs_) rng.deserialize(binio::read_string(is));
  load_task_state(is);
  // Rebuild derived buffers for rows that are mid-episode; pending rows
  // regenerate on the next access exactly as the uninterrupted run would.
  for (int b = 0; b < batch_; ++b) {
    if (needs_reset_[b]) continue;
    write_obs(b, obs_.data() + static_cast<std::size_t>(b) * n_agents_ * d_obs_);
    if (d_state_ > 0) write_state(b, state_.data() + static_cast<std::size_t>(b) * d_state_);
    if (!mask_.empty()) write_mask(b, mask_.data() + static_cast<std::size_t>(b) * n_agents_ * n_actions_);
  }
}

// ---- navigate ------------------------------------------------------------------

namespace {

class PointTaskEnv : public VectorEnv {
 protected:
  PointTaskEnv(TaskDef task, ActionVariant variant, int batch, std::uint64_t seed)
      : VectorEnv(std::move(task), variant, batch, seed) {}

  // kinematics shared by navigate and spread
  void move_agent(int b, int i, const Actions& actions) {
    const double bound = task_.world_bound;
    double dx = 0.0, dy = 0.0;
    if (variant_ == ActionVariant::Continuous) {
      const float* a =
          actions[0].continuous.data() + (static_cast<std::size_t>(b) * n_agents_ + i) * d_act_;
      dx = a[0] * task_.dt;
      dy = a[1] * task_.dt;
    } else {
      switch (actions[0].discrete[static_cast<std::size_t>(b) * n_agents_ + i]) {
        case 0: break;
        case 1: dx = task_.dt; break;
        case 2: dx = -task_.dt; break;
        case 3: dy = task_.dt; break;
        case 4: dy = -task_.dt; break;
      }
    }
    auto& p = pos_[(static_cast<std::size_t>(b) * n_agents_ + i) * 2];
    auto& q = pos_[(static_cast<std::size_t>(b) * n_agents_ + i) * 2 + 1];
    p = std::clamp(p + dx, -bound, bound);
    q = std::clamp(q + dy, -bound, bound);
  }

  std::vector<double> pos_;  // [B, n, 2]
};

class NavigateEnv final : public PointTaskEnv {
 public:
  NavigateEnv(TaskDef task, ActionVariant variant, int batch, std::uint64_t seed)
      : PointTaskEnv(std::move(task), variant, batch, seed) {
    d_obs_ = 2 * n_agents_ + 2;
    d_state_ = 4 * n_agents_;
    if (variant_ == ActionVariant::Continuous)
      d_act_ = 2;
    else
      n_actions_ = 5;
    pos_.assign(static_cast<std::size_t>(batch_) * n_agents_ * 2, 0.0);
    goal_.assign(static_cast<std::size_t>(batch_) * n_agents_ * 2, 0.0);

    GroupSpec group;
    group.name = "agents";
    group.agent_names = agent_names(n_agents_);
    group.observation = DomainSpec::continuous({d_obs_}, -2 * task_.world_bound, 2 * task_.world_bound);
    group.action = variant_ == ActionVariant::Continuous ? DomainSpec::continuous({2}, -1.0, 1.0)
                                                         : DomainSpec::discrete(5);
    group.has_global_state = true;
    group.state = DomainSpec::continuous({d_state_}, -task_.world_bound, task_.world_bound);
    groups_ = {group};

    obs_.assign(static_cast<std::size_t>(batch_) * n_agents_ * d_obs_, 0.0f);
    state_.assign(static_cast<std::size_t>(batch_) * d_state_, 0.0f);
  }

 private:
  void reset_env(int b) override {
    auto& rng = env_rngs_[b];
    const double bound = task_.world_bound;
    for (int i = 0; i < n_agents_ * 2; ++i)
      pos_[static_cast<std::size_t>(b) * n_agents_ * 2 + i] = rng.uniform(-bound, bound);
    for (int i = 0; i < n_agents_ * 2; ++i)
      goal_[static_cast<std::size_t>(b) * n_agents_ * 2 + i] = rng.uniform(-bound, bound);
  }

  double dist_to_goal(int b, int i) const {
    const std::size_t k = (static_cast<std::size_t>(b) * n_agents_ + i) * 2;
    const double dx = goal_[k] - pos_[k];
    const double dy = goal_[k + 1] - pos_[k + 1];
    return std::sqrt(dx * dx + dy * dy);
  }

  void advance_env(int b, const Actions& actions, float* rewards) override {
    for (int i = 0; i < n_agents_; ++i) {
      const double before = dist_to_goal(b, i);
      move_agent(b, i, actions);
      rewards[i] = static_cast<float>(before - dist_to_goal(b, i));
    }
  }

  void write_obs(int b, float* out) const override {
    for (int i = 0; i < n_agents_; ++i) {
      float* o = out + static_cast<std::size_t>(i) * d_obs_;
      const std::size_t k = (static_cast<std::size_t>(b) * n_agents_ + i) * 2;
      o[0] = static_cast<float>(pos_[k]);
      o[1] = static_cast<float>(pos_[k + 1]);
      o[2] = static_cast<float>(goal_[k] - pos_[k]);
      o[3] = static_cast<float>(goal_[k + 1] - pos_[k + 1]);
      int c = 4;
      for (int j = 0; j < n_agents_; ++j) {
        if (j == i) continue;
        const std::size_t kj = (static_cast<std::size_t>(b) * n_agents_ + j) * 2;
        o[c++] = static_cast<float>(pos_[kj] - pos_[k]);
        o[c++] = static_cast<float>(pos_[kj + 1] - pos_[k + 1]);
      }
    }
  }

  void write_state(int b, float* out) const override {
    for (int i = 0; i < n_agents_ * 2; ++i)
      out[i] = static_cast<float>(pos_[static_cast<std::size_t>(b) * n_agents_ * 2 + i]);
    for (int i = 0; i < n_agents_ * 2; ++i)
      out[2 * n_agents_ + i] = static_cast<float>(goal_[static_cast<std::size_t>(b) * n_agents_ * 2 + i]);
  }

  void save_task_state(std::ostream& os) const override {
    binio::write_vec(os, pos_);
    binio::write_vec(os, goal_);
  }
  void load_task_state(std::istream& is) override {
    pos_ = binio::read_vec<double>(is);
    goal_ = binio::read_vec<double>(is);
  }

  std::vector<double> goal_;  // [B, n, 2]
};

// ---- spread --------------------------------------------------------------------

class SpreadEnv final : public PointTaskEnv {
 public:
  SpreadEnv(TaskDef task, ActionVariant variant, int batch, std::uint64_t seed)
      : PointTaskEnv(std::move(task), variant, batch, seed) {
    n_landmarks_ = n_agents_;
    d_obs_ = 2 + 2 * n_landmarks_ + 2 * (n_agents_ - 1);
    d_state_ = 0;  // no global state in this task
    if (variant_ == ActionVariant::Continuous)
      d_act_ = 2;
    else
      n_actions_ = 5;
    pos_.assign(static_cast<std::size_t>(batch_) * n_agents_ * 2, 0.0);
    landmarks_.assign(static_cast<std::size_t>(batch_) * n_landmarks_ * 2, 0.0);

    GroupSpec group;
    group.name = "agents";
    group.agent_names = agent_names(n_agents_);
    group.observation = DomainSpec::continuous({d_obs_}, -2 * task_.world_bound, 2 * task_.world_bound);
    group.action = variant_ == ActionVariant::Continuous ? DomainSpec::continuous({2}, -1.0, 1.0)
                                                         : DomainSpec::discrete(5);
    group.has_global_state = false;
    groups_ = {group};

    obs_.assign(static_cast<std::size_t>(batch_) * n_agents_ * d_obs_, 0.0f);
  }

 private:
  void reset_env(int b) override {
    auto& rng = env_rngs_[b];
    const double bound = task_.world_bound;
    for (int i = 0; i < n_agents_ * 2; ++i)
      pos_[static_cast<std::size_t>(b) * n_agents_ * 2 + i] = rng.uniform(-bound, bound);
    for (int i = 0; i < n_landmarks_ * 2; ++i)
      landmarks_[static_cast<std::size_t>(b) * n_landmarks_ * 2 + i] = rng.uniform(-bound, bound);
  }

  void advance_env(int b, const Actions& actions, float* rewards) override {
    for (int i = 0; i < n_agents_; ++i) move_agent(b, i, actions);
    double r = 0.0;
    for (int l = 0; l < n_landmarks_; ++l) {
      const std::size_t kl = (static_cast<std::size_t>(b) * n_landmarks_ + l) * 2;
      double best = std::numeric_limits<double>::max();
      for (int i = 0; i < n_agents_; ++i) {
        const std::size_t ki = (static_cast<std::size_t>(b) * n_agents_ + i) * 2;
        const double dx = pos_[ki] - landmarks_[kl];
        const double dy = pos_[ki + 1] - landmarks_[kl + 1];
        best = std::min(best, std::sqrt(dx * dx + dy * dy));
      }
      r -= best;
    }
    for (int i = 0; i < n_agents_; ++i) rewards[i] = static_cast<float>(r);  // shared
  }

  void write_obs(int b, float* out) const override {
    for (int i = 0; i < n_agents_; ++i) {
      float* o = out + static_cast<std::size_t>(i) * d_obs_;
      const std::size_t k = (static_cast<std::size_t>(b) * n_agents_ + i) * 2;
      int c = 0;
      o[c++] = static_cast<float>(pos_[k]);
      o[c++] = static_cast<float>(pos_[k + 1]);
      for (int l = 0; l < n_landmarks_; ++l) {
        const std::size_t kl = (static_cast<std::size_t>(b) * n_landmarks_ + l) * 2;
        o[c++] = static_cast<float>(landmarks_[kl] - pos_[k]);
        o[c++] = static_cast<float>(landmarks_[kl + 1] - pos_[k + 1]);
      }
      for (int j = 0; j < n_agents_; ++j) {
        if (j == i) continue;
        const std::size_t kj = (static_cast<std::size_t>(b) * n_agents_ + j) * 2;
        o[c++] = static_cast<float>(pos_[kj] - pos_[k]);
        o[c++] = static_cast<float>(pos_[kj + 1] - pos_[k + 1]);
      }
    }
  }

  void save_task_state(std::ostream& os) const override {
    binio::write_vec(os, pos_);
    binio::write_vec(os, landmarks_);
  }
  void load_task_state(std::istream& is) override {
    pos_ = binio::read_vec<double>(is);
    landmarks_ = binio::read_vec<double>(is);
  }

  int n_landmarks_ = 0;
  std::vector<double> landmarks_;  // [B, L, 2]
};

// ---- one-shot matrix games -------------------------------------------------------

class MatrixEnv final : public VectorEnv {
 public:
  MatrixEnv(TaskDef task, ActionVariant variant, int batch, std::uint64_t seed)
      : VectorEnv(std::move(task), variant, batch, seed) {
    if (variant_ != ActionVariant::Discrete)
      throw std::invalid_argument("task " + task_.name + " offers no continuous variant");
    d_obs_ = 1;
    d_state_ = n_agents_;  // constant observations concatenated
    n_actions_ = static_cast<int>(task_.payoff.size());

    GroupSpec group;
    group.name = "agents";
    group.agent_names = agent_names(n_agents_);
    group.observation = DomainSpec::continuous({1}, -1.0, 1.0);
    group.action = DomainSpec::discrete(n_actions_, task_.masked);
    group.has_global_state = true;
    group.state = DomainSpec::continuous({d_state_}, -1.0, 1.0);
    groups_ = {group};

    obs_.assign(static_cast<std::size_t>(batch_) * n_agents_, 0.0f);
    state_.assign(static_cast<std::size_t>(batch_) * d_state_, 0.0f);
    if (task_.masked) mask_.assign(static_cast<std::size_t>(batch_) * n_agents_ * n_actions_, 1.0f);
  }

 private:
  void reset_env(int) override {}

  void advance_env(int b, const Actions& actions, float* rewards) override {
    const auto a0 = actions[0].discrete[static_cast<std::size_t>(b) * n_agents_];
    const auto a1 = actions[0].discrete[static_cast<std::size_t>(b) * n_agents_ + 1];
    const float r = static_cast<float>(task_.payoff[static_cast<std::size_t>(a0)][static_cast<std::size_t>(a1)]);
    for (int i = 0; i < n_agents_; ++i) rewards[i] = r;
  }

  void write_obs(int, float* out) const override {
    for (int i = 0; i < n_agents_; ++i) out[i] = 0.0f;
  }
  void write_state(int, float* out) const override {
    for (int i = 0; i < d_state_; ++i) out[i] = 0.0f;
  }
  void write_mask(int, float* out) const override {
    for (int i = 0; i < n_agents_; ++i) {
      out[i * n_actions_] = 0.0f;  // action 0 masked for every agent
      for (int a = 1; a < n_actions_; ++a) out[i * n_actions_ + a] = 1.0f;
    }
  }

  void save_task_state(std::ostream&) const override {}
  void load_task_state(std::istream&) override {}
};

}  // namespace

std::unique_ptr<VectorEnv> make_env(const TaskDef& task, ActionVariant variant, int batch,
                                    std::uint64_t seed) {
  std::unique_ptr<VectorEnv> env;
  if (!task.payoff.empty())
    env = std::make_unique<MatrixEnv>(task, variant, batch, seed);
  else if (task.name == "navigate")
    env = std::make_unique<NavigateEnv>(task, variant, batch, seed);
  else if (task.name == "spread")
    env = std::make_unique<SpreadEnv>(task, variant, batch, seed);
  else
    throw std::invalid_argument("make_env: unknown task '" + task.name + "'");
  // populate initial observations
  env->current_obs(0);
  return env;
}

long env_construction_count() { return g_env_constructions.load(); }

}  // namespace marlbench::envs
