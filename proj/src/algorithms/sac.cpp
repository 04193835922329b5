#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "marlbench/algorithms/algorithm.hpp"
#include "marlbench/algorithms/distributions.hpp"
#include "marlbench/algorithms/mixers.hpp"
#include "marlbench/algorithms/replay_buffer.hpp"
#include "marlbench/core/binio.hpp"

namespace marlbench::algorithms {

namespace {

using envs::ActionVariant;
using envs::DomainSpec;
using models::InstMode;
using num::NoGradGuard;
using num::Shape;

// Soft actor-critic with twin critics and a fixed temperature. Continuous
// actors are tanh-squashed Gaussians updated by reparameterization; discrete
// actors use the expected-value form over the categorical distribution.
class SacAlgorithm final : public Algorithm {
 public:
  SacAlgorithm(const AlgoContext& ctx, RngStream& rng) : Algorithm(ctx) {
    const bool full_obs = ctx_.desc.critic_observability == CriticObservability::Full;
    for (const auto& gs : ctx_.groups) {
      Group g;
      g.n = gs.n_agents();
      g.d_obs = gs.observation.feature_dim();
      g.discrete = gs.action.kind == DomainSpec::Kind::Discrete;
      g.d_act = g.discrete ? 0 : gs.action.feature_dim();
      g.n_actions = g.discrete ? gs.action.n : 0;
      g.dg = critic_obs_dim(full_obs, g.n, g.d_obs, ctx_.d_state);
      g.act_feats = g.discrete ? 0 : (full_obs ? g.n * g.d_act : g.d_act);
      const int critic_in = g.dg + g.act_feats;
      const int critic_out = g.discrete ? g.n_actions : 1;
      const int actor_out = g.discrete ? g.n_actions : 2 * g.d_act;  // mean || log_std

      auto critic_spec_in = DomainSpec::continuous({critic_in}, -1e9, 1e9);
      auto critic_spec_out = DomainSpec::continuous({critic_out}, -1e9, 1e9);
      g.actor = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_actor,
                                    gs.observation, DomainSpec::continuous({actor_out}, -1e9, 1e9), rng, 0.01);
      g.q1 = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_critic,
                                 critic_spec_in, critic_spec_out, rng);
      g.q2 = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_critic,
                                 critic_spec_in, critic_spec_out, rng);
      RngStream throwaway(1);
      g.q1_target = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_critic,
                                        critic_spec_in, critic_spec_out, throwaway);
      g.q2_target = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_critic,
                                        critic_spec_in, critic_spec_out, throwaway);
      models::copy_parameters(*g.q1, *g.q1_target);
      models::copy_parameters(*g.q2, *g.q2_target);
      for (auto& p : g.q1_target->parameters()) p.tensor.set_requires_grad(false);
      for (auto& p : g.q2_target->parameters()) p.tensor.set_requires_grad(false);

      std::vector<Param> actor_params, critic_params;
      for (auto& p : g.actor->parameters()) actor_params.push_back({"actor." + p.name, p.tensor});
      for (auto& p : g.q1->parameters()) critic_params.push_back({"q1." + p.name, p.tensor});
      for (auto& p : g.q2->parameters()) critic_params.push_back({"q2." + p.name, p.tensor});
      g.opt_actor = Adam(actor_params, ctx_.hp.lr);
      g.opt_critic = Adam(critic_params, ctx_.hp.lr);

      ReplayBuffer::Layout layout;
      layout.capacity = ctx_.hp.buffer_capacity;
      layout.n_agents = g.n;
      layout.d_obs = g.d_obs;
      layout.d_act = g.d_act;
      layout.n_actions = g.n_actions;
      layout.maskable = gs.action.maskable;
      layout.d_state = ctx_.d_state;
      g.buffer = ReplayBuffer(layout);
      groups_.push_back(std::move(g));
    }
  }

  ActOutput act(const std::vector<std::vector<float>>& obs, const std::vector<std::vector<float>>& masks,
                const std::vector<float>&, int B, std::int64_t, RngStream& rng) override {
    NoGradGuard ng;
    ActOutput out;
    out.actions.resize(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      const std::size_t rows = static_cast<std::size_t>(B) * g.n;
      Tensor obs_t(Shape{static_cast<std::size_t>(B), static_cast<std::size_t>(g.n),
                         static_cast<std::size_t>(g.d_obs)},
                   obs[gi]);
      Tensor head = g.actor->forward(obs_t);
      if (g.discrete) {
        Tensor logits = mask_logits(head, masks[gi]);
        out.actions[gi].discrete =
            sample_categorical(logits.softmax_last().data(), rows, g.n_actions, rng);
      } else {
        const auto& h = head.data();
        std::vector<float> a(rows * g.d_act);
        for (std::size_t r = 0; r < rows; ++r)
          for (int d = 0; d < g.d_act; ++d) {
            const double mean = h[r * 2 * g.d_act + d];
            const double ls = std::clamp<double>(h[r * 2 * g.d_act + g.d_act + d], kLogStdMin, kLogStdMax);
            a[r * g.d_act + d] = static_cast<float>(std::tanh(mean + std::exp(ls) * rng.normal()));
          }
        out.actions[gi].continuous = std::move(a);
      }
    }
    return out;
  }

  envs::Actions act_eval(const std::vector<std::vector<float>>& obs,
                         const std::vector<std::vector<float>>& masks, int B) override {
    NoGradGuard ng;
    envs::Actions actions(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      const std::size_t rows = static_cast<std::size_t>(B) * g.n;
      Tensor obs_t(Shape{static_cast<std::size_t>(B), static_cast<std::size_t>(g.n),
                         static_cast<std::size_t>(g.d_obs)},
                   obs[gi]);
      Tensor head = g.actor->forward(obs_t);
      if (g.discrete) {
        Tensor logits = mask_logits(head, masks[gi]);
        actions[gi].discrete = masked_argmax(logits.data(), {}, rows, g.n_actions);
      } else {
        actions[gi].continuous = head.slice(2, 0, static_cast<std::size_t>(g.d_act)).tanh().data();
      }
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
          auto losses = g.discrete ? train_step_discrete(g, rng) : train_step_continuous(g, rng);
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
      add("q1", groups_[gi].q1);
      add("q2", groups_[gi].q2);
      add("q1_target", groups_[gi].q1_target);
      add("q2_target", groups_[gi].q2_target);
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
    int n = 1, d_obs = 0, d_act = 0, n_actions = 0, dg = 0, act_feats = 0;
    bool discrete = false;
    models::ModelPtr actor, q1, q2, q1_target, q2_target;
    Adam opt_actor, opt_critic;
    ReplayBuffer buffer;
    std::int64_t update_count = 0;
  };

  bool full_obs() const { return ctx_.desc.critic_observability == CriticObservability::Full; }

  void maybe_soft_update(Group& g) {
    ++g.update_count;
    if (g.update_count % ctx_.hp.target_update_period == 0) {
      models::soft_update(*g.q1, *g.q1_target, ctx_.hp.tau);
      models::soft_update(*g.q2, *g.q2_target, ctx_.hp.tau);
    }
  }

  std::array<double, 2> train_step_continuous(Group& g, RngStream& rng) {
    const double alpha = ctx_.hp.sac_alpha;
    auto s = g.buffer.sample(ctx_.hp.batch_size, rng);
    const std::size_t k = s.count;
    const std::size_t n = static_cast<std::size_t>(g.n);
    const std::size_t rows = k * n;

    // y = r + gamma (1-d) (min Q'(s', a') - alpha log pi(a'|s')), a' ~ pi
    std::vector<float> y(rows);
    {
      NoGradGuard ng;
      Tensor next_obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.next_obs);
      const std::vector<float> head = g.actor->forward(next_obs_t).data();
      std::vector<float> a_next(rows * g.d_act), pre(rows * g.d_act), logp(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        std::vector<float> mean(g.d_act), ls(g.d_act);
        for (int d = 0; d < g.d_act; ++d) {
          mean[d] = head[r * 2 * g.d_act + d];
          ls[d] = head[r * 2 * g.d_act + g.d_act + d];
        }
        for (int d = 0; d < g.d_act; ++d) {
          const double sd = std::exp(std::clamp<double>(ls[d], kLogStdMin, kLogStdMax));
          const double u = mean[d] + sd * rng.normal();
          pre[r * g.d_act + d] = static_cast<float>(u);
          a_next[r * g.d_act + d] = static_cast<float>(std::tanh(u));
        }
        logp[r] = static_cast<float>(squashed_gaussian_logprob(
            mean.data(), ls.data(), pre.data() + r * g.d_act, a_next.data() + r * g.d_act, g.d_act));
      }
      std::vector<float> feat = critic_obs_rows(s.next_obs, s.next_state, static_cast<int>(k), g.n, g.d_obs,
                                                ctx_.d_state, full_obs());
      std::vector<float> act_rows =
          full_obs() ? tile_joint_actions(a_next, static_cast<int>(k), g.n, g.d_act) : a_next;
      std::vector<float> crit_rows = append_features(feat, g.dg, act_rows, g.act_feats, rows);
      Tensor crit_t(Shape{k, n, static_cast<std::size_t>(g.dg + g.act_feats)}, crit_rows);
      const std::vector<float> q1v = g.q1_target->forward(crit_t).data();
      const std::vector<float> q2v = g.q2_target->forward(crit_t).data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double not_done = s.done[r / n] ? 0.0 : 1.0;
        const double soft = std::min(q1v[r], q2v[r]) - alpha * logp[r];
        y[r] = static_cast<float>(s.reward[r] + ctx_.hp.gamma * not_done * soft);
      }
    }

    // twin critic regression
    std::vector<float> feat =
        critic_obs_rows(s.obs, s.state, static_cast<int>(k), g.n, g.d_obs, ctx_.d_state, full_obs());
    std::vector<float> act_rows =
        full_obs() ? tile_joint_actions(s.action, static_cast<int>(k), g.n, g.d_act) : s.action;
    std::vector<float> crit_rows = append_features(feat, g.dg, act_rows, g.act_feats, rows);
    Tensor crit_t(Shape{k, n, static_cast<std::size_t>(g.dg + g.act_feats)}, crit_rows);
    Tensor y_t(Shape{k, n}, y);
    Tensor d1 = g.q1->forward(crit_t).reshape({k, n}) - y_t;
    Tensor d2 = g.q2->forward(crit_t).reshape({k, n}) - y_t;
    Tensor critic_loss = (d1 * d1).mean_all() + (d2 * d2).mean_all();
    g.opt_critic.zero_grad();
    g.opt_actor.zero_grad();
    critic_loss.backward();
    if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt_critic.params(), ctx_.hp.grad_clip);
    g.opt_critic.step();

    // reparameterized actor update
    std::vector<float> xi(rows * g.d_act);
    for (auto& v : xi) v = static_cast<float>(rng.normal());
    Tensor obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.obs);
    Tensor head = g.actor->forward(obs_t);
    Tensor mean = head.slice(2, 0, static_cast<std::size_t>(g.d_act));
    Tensor log_std = head.slice(2, static_cast<std::size_t>(g.d_act), static_cast<std::size_t>(g.d_act));
    ReparamSample rs = squashed_gaussian_rsample(mean, log_std, Tensor(mean.shape(), xi));
    Tensor feat_t(Shape{k, n, static_cast<std::size_t>(g.dg)}, feat);
    Tensor act_feat_t = full_obs()
                            ? rs.actions.reshape({k, 1, n * static_cast<std::size_t>(g.d_act)}) *
                                  Tensor::ones({k, n, n * static_cast<std::size_t>(g.d_act)})
                            : rs.actions;
    Tensor crit_in = num::concat<float>({feat_t, act_feat_t}, 2);
    Tensor q1n = g.q1->forward(crit_in).reshape({k, n});
    Tensor q2n = g.q2->forward(crit_in).reshape({k, n});
    Tensor actor_loss = (static_cast<float>(alpha) * rs.log_prob - minimum(q1n, q2n)).mean_all();
    g.opt_actor.zero_grad();
    g.opt_critic.zero_grad();
    actor_loss.backward();
    if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt_actor.params(), ctx_.hp.grad_clip);
    g.opt_actor.step();
    g.opt_critic.zero_grad();

    maybe_soft_update(g);
    return {critic_loss.item(), actor_loss.item()};
  }

  std::array<double, 2> train_step_discrete(Group& g, RngStream& rng) {
    const double alpha = ctx_.hp.sac_alpha;
    auto s = g.buffer.sample(ctx_.hp.batch_size, rng);
    const std::size_t k = s.count;
    const std::size_t n = static_cast<std::size_t>(g.n);
    const std::size_t rows = k * n;
    const std::size_t A = static_cast<std::size_t>(g.n_actions);

    std::vector<float> feat_next = critic_obs_rows(s.next_obs, s.next_state, static_cast<int>(k), g.n,
                                                   g.d_obs, ctx_.d_state, full_obs());
    std::vector<float> feat =
        critic_obs_rows(s.obs, s.state, static_cast<int>(k), g.n, g.d_obs, ctx_.d_state, full_obs());

    // y = r + gamma (1-d) E_{a'~pi}[min Q'(s')[a'] - alpha log pi(a'|s')]
    std::vector<float> y(rows);
    {
      NoGradGuard ng;
      Tensor next_obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.next_obs);
      Tensor logits = mask_logits(g.actor->forward(next_obs_t), s.next_mask);
      const std::vector<float> p = logits.softmax_last().data();
      const std::vector<float> lp = logits.log_softmax_last().data();
      Tensor crit_t(Shape{k, n, static_cast<std::size_t>(g.dg)}, feat_next);
      const std::vector<float> q1v = g.q1_target->forward(crit_t).data();
      const std::vector<float> q2v = g.q2_target->forward(crit_t).data();
      for (std::size_t r = 0; r < rows; ++r) {
        double exp_val = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          const double pa = p[r * A + a];
          if (pa <= 0.0) continue;
          exp_val += pa * (std::min(q1v[r * A + a], q2v[r * A + a]) - alpha * lp[r * A + a]);
        }
        const double not_done = s.done[r / n] ? 0.0 : 1.0;
        y[r] = static_cast<float>(s.reward[r] + ctx_.hp.gamma * not_done * exp_val);
      }
    }

    Tensor crit_t(Shape{k, n, static_cast<std::size_t>(g.dg)}, feat);
    Tensor y_t(Shape{k, n}, y);
    Tensor q1_all = g.q1->forward(crit_t);
    Tensor q2_all = g.q2->forward(crit_t);
    Tensor d1 = gather(q1_all, 2, s.action_index) - y_t;
    Tensor d2 = gather(q2_all, 2, s.action_index) - y_t;
    Tensor critic_loss = (d1 * d1).mean_all() + (d2 * d2).mean_all();
    g.opt_critic.zero_grad();
    g.opt_actor.zero_grad();
    critic_loss.backward();
    if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt_critic.params(), ctx_.hp.grad_clip);
    g.opt_critic.step();

    // expected-value actor update with detached critic values
    std::vector<float> qmin(rows * A);
    {
      NoGradGuard ng;
      const std::vector<float> q1v = g.q1->forward(crit_t).data();
      const std::vector<float> q2v = g.q2->forward(crit_t).data();
      for (std::size_t i = 0; i < qmin.size(); ++i) qmin[i] = std::min(q1v[i], q2v[i]);
    }
    Tensor obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.obs);
    Tensor logits = mask_logits(g.actor->forward(obs_t), s.mask);
    Tensor p = logits.softmax_last();
    Tensor lp = logits.log_softmax_last();
    Tensor qmin_t(Shape{k, n, A}, qmin);
    Tensor actor_loss = (p * (static_cast<float>(alpha) * lp - qmin_t)).sum(2).mean_all();
    g.opt_actor.zero_grad();
    g.opt_critic.zero_grad();
    actor_loss.backward();
    if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt_actor.params(), ctx_.hp.grad_clip);
    g.opt_actor.step();
    g.opt_critic.zero_grad();

    maybe_soft_update(g);
    (void)rng;
    return {critic_loss.item(), actor_loss.item()};
  }

  std::vector<Group> groups_;
};

}  // namespace

std::unique_ptr<Algorithm> make_sac(const AlgoContext& ctx, RngStream& init_rng) {
  return std::make_unique<SacAlgorithm>(ctx, init_rng);
}

}  // namespace marlbench::algorithms
