#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "marlbench/algorithms/algorithm.hpp"
#include "marlbench/algorithms/replay_buffer.hpp"
#include "marlbench/core/binio.hpp"

namespace marlbench::algorithms {

namespace {

using envs::DomainSpec;
using models::InstMode;
using num::NoGradGuard;
using num::Shape;

// Deterministic-policy gradient over grouped agents. The centralized flavor
// gives each agent's critic the global features plus every agent's action;
// the independent flavor sees only the local observation and action.
class DdpgAlgorithm final : public Algorithm {
 public:
  DdpgAlgorithm(const AlgoContext& ctx, RngStream& rng) : Algorithm(ctx) {
    if (ctx_.variant != envs::ActionVariant::Continuous)
      throw std::invalid_argument(ctx_.desc.name + " supports continuous actions only");
    const bool full_obs = ctx_.desc.critic_observability == CriticObservability::Full;
    for (const auto& gs : ctx_.groups) {
      Group g;
      g.n = gs.n_agents();
      g.d_obs = gs.observation.feature_dim();
      g.d_act = gs.action.feature_dim();
      g.dg = critic_obs_dim(full_obs, g.n, g.d_obs, ctx_.d_state);
      g.act_feats = full_obs ? g.n * g.d_act : g.d_act;
      const int critic_in = g.dg + g.act_feats;

      g.actor = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_actor,
                                    gs.observation, DomainSpec::continuous({g.d_act}, -1e9, 1e9), rng, 0.01);
      g.critic = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_critic,
                                     DomainSpec::continuous({critic_in}, -1e9, 1e9),
                                     DomainSpec::continuous({1}, -1e9, 1e9), rng);
      RngStream throwaway(1);
      g.actor_target = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_actor,
                                           gs.observation, DomainSpec::continuous({g.d_act}, -1e9, 1e9),
                                           throwaway, 0.01);
      g.critic_target = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n,
                                            ctx_.share_critic, DomainSpec::continuous({critic_in}, -1e9, 1e9),
                                            DomainSpec::continuous({1}, -1e9, 1e9), throwaway);
      models::copy_parameters(*g.actor, *g.actor_target);
      models::copy_parameters(*g.critic, *g.critic_target);
      for (auto& p : g.actor_target->parameters()) p.tensor.set_requires_grad(false);
      for (auto& p : g.critic_target->parameters()) p.tensor.set_requires_grad(false);

      std::vector<Param> actor_params, critic_params;
      for (auto& p : g.actor->parameters()) actor_params.push_back({"actor." + p.name, p.tensor});
      for (auto& p : g.critic->parameters()) critic_params.push_back({"critic." + p.name, p.tensor});
      g.opt_actor = Adam(actor_params, ctx_.hp.lr);
      g.opt_critic = Adam(critic_params, ctx_.hp.lr);

      ReplayBuffer::Layout layout;
      layout.capacity = ctx_.hp.buffer_capacity;
      layout.n_agents = g.n;
      layout.d_obs = g.d_obs;
      layout.d_act = g.d_act;
      layout.d_state = ctx_.d_state;
      g.buffer = ReplayBuffer(layout);
      groups_.push_back(std::move(g));
    }
  }

  ActOutput act(const std::vector<std::vector<float>>& obs, const std::vector<std::vector<float>>&,
                const std::vector<float>&, int B, std::int64_t, RngStream& rng) override {
    NoGradGuard ng;
    ActOutput out;
    out.actions.resize(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      Tensor obs_t(Shape{static_cast<std::size_t>(B), static_cast<std::size_t>(g.n),
                         static_cast<std::size_t>(g.d_obs)},
                   obs[gi]);
      std::vector<float> a = g.actor->forward(obs_t).tanh().data();
      for (auto& v : a) {
        v = static_cast<float>(v + ctx_.hp.ddpg_sigma * rng.normal());
        v = std::clamp(v, -1.0f, 1.0f);
      }
      out.actions[gi].continuous = std::move(a);
    }
    return out;
  }

  envs::Actions act_eval(const std::vector<std::vector<float>>& obs, const std::vector<std::vector<float>>&,
                         int B) override {
    NoGradGuard ng;
    envs::Actions actions(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      Tensor obs_t(Shape{static_cast<std::size_t>(B), static_cast<std::size_t>(g.n),
                         static_cast<std::size_t>(g.d_obs)},
                   obs[gi]);
      actions[gi].continuous = g.actor->forward(obs_t).tanh().data();
    }
    return actions;
  }

  void observe(const envs::StepBatch& batch, const ActOutput&) override {
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) groups_[gi].buffer.add(batch, gi);
  }

  LossReport train(std::int64_t, RngStream& rng, const std::vector<bool>& frozen) override {
    LossReport report;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      const std::string prefix = ctx_.groups[gi].name + "/";
      double critic_acc = 0.0, actor_acc = 0.0;
      int updates = 0;
      const bool skip = (gi < frozen.size() && frozen[gi]) || g.buffer.size() < ctx_.hp.batch_size;
      if (!skip) {
        for (int step = 0; step < ctx_.off_policy_train_steps; ++step) {
          auto losses = train_step(g, rng);
          critic_acc += losses[0];
          actor_acc += losses[1];
          ++updates;
        }
      }
      const double inv = updates > 0 ? 1.0 / updates : 0.0;
      report.entries.push_back({prefix + "critic_loss", critic_acc * inv});
      report.entries.push_back({prefix + "actor_loss", actor_acc * inv});
    }
    return report;
  }

  std::vector<std::string> loss_names() const override {
    std::vector<std::string> names;
    for (const auto& g : ctx_.groups) {
      names.push_back(g.name + "/critic_loss");
      names.push_back(g.name + "/actor_loss");
    }
    return names;
  }

  std::int64_t buffer_size(std::size_t group) const override { return groups_.at(group).buffer.size(); }

  std::vector<Param> named_parameters() const override {
    std::vector<Param> out;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const std::string prefix = ctx_.groups[gi].name + ".";
      auto add = [&](const char* tag, const models::ModelPtr& m) {
        for (auto& p : m->parameters()) out.push_back({prefix + tag + ("." + p.name), p.tensor});
      };
      add("actor", groups_[gi].actor);
      add("critic", groups_[gi].critic);
      add("actor_target", groups_[gi].actor_target);
      add("critic_target", groups_[gi].critic_target);
    }
    return out;
  }

  void save(std::ostream& os) const override {
    save_params(os, named_parameters());
    for (const auto& g : groups_) {
      save_adam(os, g.opt_actor);
      save_adam(os, g.opt_critic);
      g.buffer.save(os);
      binio::write_pod<std::int64_t>(os, g.update_count);
    }
  }

  void load(std::istream& is) override {
    load_params(is, named_parameters());
    for (auto& g : groups_) {
      load_adam(is, g.opt_actor);
      load_adam(is, g.opt_critic);
      g.buffer.load(is);
      g.update_count = binio::read_pod<std::int64_t>(is);
    }
  }

 private:
  struct Group {
    int n = 1, d_obs = 0, d_act = 0, dg = 0, act_feats = 0;
    models::ModelPtr actor, critic, actor_target, critic_target;
    Adam opt_actor, opt_critic;
    ReplayBuffer buffer;
    std::int64_t update_count = 0;
  };

  // one gradient step; returns {critic_loss, actor_loss}
  std::array<double, 2> train_step(Group& g, RngStream& rng) {
    const bool full_obs = ctx_.desc.critic_observability == CriticObservability::Full;
    auto s = g.buffer.sample(ctx_.hp.batch_size, rng);
    const std::size_t k = s.count;
    const std::size_t n = static_cast<std::size_t>(g.n);
    const std::size_t rows = k * n;

    // bootstrap target y = r + gamma * (1 - d) * Q'(s', mu'(s'))
    std::vector<float> y(rows);
    {
      NoGradGuard ng;
      Tensor next_obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.next_obs);
      std::vector<float> next_actions = g.actor_target->forward(next_obs_t).tanh().data();
      std::vector<float> next_feat =
          critic_obs_rows(s.next_obs, s.next_state, static_cast<int>(k), g.n, g.d_obs, ctx_.d_state, full_obs);
      std::vector<float> act_rows = full_obs
                                        ? tile_joint_actions(next_actions, static_cast<int>(k), g.n, g.d_act)
                                        : next_actions;
      std::vector<float> crit_rows = append_features(next_feat, g.dg, act_rows, g.act_feats, rows);
      Tensor crit_t(Shape{k, n, static_cast<std::size_t>(g.dg + g.act_feats)}, crit_rows);
      std::vector<float> q_next = g.critic_target->forward(crit_t).data();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t b = r / n;
        const double not_done = s.done[b] ? 0.0 : 1.0;
        y[r] = static_cast<float>(s.reward[r] + ctx_.hp.gamma * not_done * q_next[r]);
      }
    }

    // critic regression
    std::vector<float> feat =
        critic_obs_rows(s.obs, s.state, static_cast<int>(k), g.n, g.d_obs, ctx_.d_state, full_obs);
    std::vector<float> act_rows =
        full_obs ? tile_joint_actions(s.action, static_cast<int>(k), g.n, g.d_act) : s.action;
    std::vector<float> crit_rows = append_features(feat, g.dg, act_rows, g.act_feats, rows);
    Tensor crit_t(Shape{k, n, static_cast<std::size_t>(g.dg + g.act_feats)}, crit_rows);
    Tensor y_t(Shape{k, n}, y);
    Tensor q = g.critic->forward(crit_t).reshape({k, n});
    Tensor diff = q - y_t;
    Tensor critic_loss = (diff * diff).mean_all();
    g.opt_critic.zero_grad();
    g.opt_actor.zero_grad();
    critic_loss.backward();
    if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt_critic.params(), ctx_.hp.grad_clip);
    g.opt_critic.step();

    // actor ascent on Q(s, mu(s)); feature columns stay constant, actions
    // re-enter through the graph
    Tensor obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.obs);
    Tensor a_new = g.actor->forward(obs_t).tanh();
    Tensor feat_t(Shape{k, n, static_cast<std::size_t>(g.dg)}, feat);
    Tensor act_feat_t = full_obs
                            ? a_new.reshape({k, 1, n * static_cast<std::size_t>(g.d_act)}) *
                                  Tensor::ones({k, n, n * static_cast<std::size_t>(g.d_act)})
                            : a_new;
    Tensor crit_in = num::concat<float>({feat_t, act_feat_t}, 2);
    Tensor actor_loss = -(g.critic->forward(crit_in).mean_all());
    g.opt_actor.zero_grad();
    g.opt_critic.zero_grad();
    actor_loss.backward();
    if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt_actor.params(), ctx_.hp.grad_clip);
    g.opt_actor.step();
    g.opt_critic.zero_grad();

    ++g.update_count;
    if (g.update_count % ctx_.hp.target_update_period == 0) {
      models::soft_update(*g.actor, *g.actor_target, ctx_.hp.tau);
      models::soft_update(*g.critic, *g.critic_target, ctx_.hp.tau);
    }
    return {critic_loss.item(), actor_loss.item()};
  }

  std::vector<Group> groups_;
};

}  // namespace

std::unique_ptr<Algorithm> make_ddpg(const AlgoContext& ctx, RngStream& init_rng) {
  return std::make_unique<DdpgAlgorithm>(ctx, init_rng);
}

}  // namespace marlbench::algorithms
