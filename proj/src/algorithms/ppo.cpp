#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "marlbench/algorithms/algorithm.hpp"
#include "marlbench/algorithms/distributions.hpp"
#include "marlbench/algorithms/mixers.hpp"
#include "marlbench/algorithms/gae.hpp"
#include "marlbench/core/binio.hpp"

namespace marlbench::algorithms {

namespace {

using envs::ActionVariant;
using envs::DomainSpec;
using models::InstMode;
using num::NoGradGuard;
using num::Shape;

// Clipped-surrogate PPO over grouped agents. The centralized flavor feeds
// the critic the global state (or the observation concatenation) broadcast
// to every agent row; the independent flavor feeds it the local observation.
class PpoAlgorithm final : public Algorithm {
 public:
  PpoAlgorithm(const AlgoContext& ctx, RngStream& rng) : Algorithm(ctx) {
    const bool full_obs = ctx_.desc.critic_observability == CriticObservability::Full;
    for (const auto& g : ctx_.groups) {
      Group group;
      group.n = g.n_agents();
      group.d_obs = g.observation.feature_dim();
      group.discrete = g.action.kind == DomainSpec::Kind::Discrete;
      group.d_act = group.discrete ? 0 : g.action.feature_dim();
      group.n_actions = group.discrete ? g.action.n : 0;
      group.dg = critic_obs_dim(full_obs, group.n, group.d_obs, ctx_.d_state);

      const int actor_out = group.discrete ? group.n_actions : group.d_act;
      group.actor = models::instantiate(
          ctx_.model_config, InstMode::Decentralized, group.n, ctx_.share_actor, g.observation,
          DomainSpec::continuous({actor_out}, -1e9, 1e9), rng, 0.01);
      group.critic = models::instantiate(
          ctx_.model_config, InstMode::Decentralized, group.n, ctx_.share_critic,
          DomainSpec::continuous({group.dg}, -1e9, 1e9), DomainSpec::continuous({1}, -1e9, 1e9), rng);
      if (!group.discrete) {
        const std::size_t stacks = ctx_.share_actor ? 1 : static_cast<std::size_t>(group.n);
        group.log_std = Tensor::full({stacks, static_cast<std::size_t>(group.d_act)}, -0.5f);
        group.log_std.set_requires_grad(true);
      }

      std::vector<Param> params;
      for (auto& p : group.actor->parameters()) params.push_back({"actor." + p.name, p.tensor});
      if (!group.discrete) params.push_back({"actor.log_std", group.log_std});
      for (auto& p : group.critic->parameters()) params.push_back({"critic." + p.name, p.tensor});
      group.opt = Adam(params, ctx_.hp.lr);
      groups_.push_back(std::move(group));
    }
  }

  ActOutput act(const std::vector<std::vector<float>>& obs, const std::vector<std::vector<float>>& masks,
                const std::vector<float>& /*state*/, int B, std::int64_t /*frames*/,
                RngStream& rng) override {
    NoGradGuard ng;
    ActOutput out;
    out.actions.resize(groups_.size());
    out.log_probs.resize(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      const std::size_t rows = static_cast<std::size_t>(B) * g.n;
      Tensor obs_t(Shape{static_cast<std::size_t>(B), static_cast<std::size_t>(g.n),
                         static_cast<std::size_t>(g.d_obs)},
                   obs[gi]);
      Tensor head = g.actor->forward(obs_t);
      out.log_probs[gi].resize(rows);
      if (g.discrete) {
        Tensor logits = mask_logits(head, masks[gi]);
        const std::vector<float> probs = logits.softmax_last().data();
        auto picks = sample_categorical(probs, rows, static_cast<std::size_t>(g.n_actions), rng);
        const std::vector<float> logp = logits.log_softmax_last().data();
        for (std::size_t r = 0; r < rows; ++r)
          out.log_probs[gi][r] = logp[r * g.n_actions + static_cast<std::size_t>(picks[r])];
        out.actions[gi].discrete = std::move(picks);
      } else {
        const auto& mean = head.data();
        const auto& ls = g.log_std.data();
        std::vector<float> actions(rows * g.d_act);
        std::vector<float> pre(rows * g.d_act);
        for (int b = 0; b < B; ++b)
          for (int i = 0; i < g.n; ++i) {
            const std::size_t r = static_cast<std::size_t>(b) * g.n + i;
            const float* ls_row = ls.data() + (g.log_std.shape()[0] > 1 ? i * g.d_act : 0);
            for (int d = 0; d < g.d_act; ++d) {
              const double sd = std::exp(std::clamp<double>(ls_row[d], kLogStdMin, kLogStdMax));
              const double u = mean[r * g.d_act + d] + sd * rng.normal();
              pre[r * g.d_act + d] = static_cast<float>(u);
              actions[r * g.d_act + d] = static_cast<float>(std::tanh(u));
            }
            out.log_probs[gi][r] =
                static_cast<float>(squashed_gaussian_logprob(mean.data() + r * g.d_act, ls_row,
                                                             pre.data() + r * g.d_act,
                                                             actions.data() + r * g.d_act, g.d_act));
          }
        out.actions[gi].continuous = std::move(actions);
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
      Tensor obs_t(Shape{static_cast<std::size_t>(B), static_cast<std::size_t>(g.n),
                         static_cast<std::size_t>(g.d_obs)},
                   obs[gi]);
      Tensor head = g.actor->forward(obs_t);
      if (g.discrete) {
        const std::size_t rows = static_cast<std::size_t>(B) * g.n;
        Tensor logits = mask_logits(head, masks[gi]);
        actions[gi].discrete = masked_argmax(logits.data(), {}, rows, g.n_actions);
      } else {
        actions[gi].continuous = head.tanh().data();
      }
    }
    return actions;
  }

  void observe(const envs::StepBatch& batch, const ActOutput& aout) override {
    const bool full_obs = ctx_.desc.critic_observability == CriticObservability::Full;
    const int B = static_cast<int>(batch.done.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      const auto& gs = batch.groups[gi];
      auto append = [](std::vector<float>& dst, const std::vector<float>& src) {
        dst.insert(dst.end(), src.begin(), src.end());
      };
      append(g.stage_obs, gs.obs);
      append(g.stage_crit, critic_obs_rows(gs.obs, batch.global_state, B, g.n, g.d_obs, ctx_.d_state, full_obs));
      append(g.stage_next_crit,
             critic_obs_rows(gs.next_obs, batch.next_global_state, B, g.n, g.d_obs, ctx_.d_state, full_obs));
      append(g.stage_reward, gs.reward);
      append(g.stage_logp, aout.log_probs[gi]);
      if (g.discrete) {
        g.stage_action_idx.insert(g.stage_action_idx.end(), gs.action_index.begin(), gs.action_index.end());
        if (!gs.action_mask.empty()) append(g.stage_mask, gs.action_mask);
      } else {
        append(g.stage_action, gs.action);
      }
      g.stage_done.insert(g.stage_done.end(), batch.done.begin(), batch.done.end());
      g.stage_steps += 1;
    }
  }

  LossReport train(std::int64_t /*frames*/, RngStream& rng, const std::vector<bool>& frozen) override {
    LossReport report;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      const std::string prefix = ctx_.groups[gi].name + "/";
      if (gi < frozen.size() && frozen[gi]) {
        g.clear_stage();
        report.entries.push_back({prefix + "policy_loss", 0.0});
        report.entries.push_back({prefix + "value_loss", 0.0});
        report.entries.push_back({prefix + "entropy", 0.0});
        continue;
      }
      auto losses = train_group(g, rng);
      report.entries.push_back({prefix + "policy_loss", losses[0]});
      report.entries.push_back({prefix + "value_loss", losses[1]});
      report.entries.push_back({prefix + "entropy", losses[2]});
      g.clear_stage();
    }
    return report;
  }

  std::vector<std::string> loss_names() const override {
    std::vector<std::string> names;
    for (const auto& g : ctx_.groups) {
      names.push_back(g.name + "/policy_loss");
      names.push_back(g.name + "/value_loss");
      names.push_back(g.name + "/entropy");
    }
    return names;
  }

  std::vector<Param> named_parameters() const override {
    std::vector<Param> out;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const std::string prefix = ctx_.groups[gi].name + ".";
      for (auto& p : groups_[gi].actor->parameters()) out.push_back({prefix + "actor." + p.name, p.tensor});
      if (!groups_[gi].discrete) out.push_back({prefix + "actor.log_std", groups_[gi].log_std});
      for (auto& p : groups_[gi].critic->parameters())
        out.push_back({prefix + "critic." + p.name, p.tensor});
    }
    return out;
  }

  void save(std::ostream& os) const override {
    save_params(os, named_parameters());
    for (const auto& g : groups_) save_adam(os, g.opt);
  }

  void load(std::istream& is) override {
    load_params(is, named_parameters());
    for (auto& g : groups_) load_adam(is, g.opt);
  }

 private:
  struct Group {
    int n = 1, d_obs = 0, d_act = 0, n_actions = 0, dg = 0;
    bool discrete = false;
    models::ModelPtr actor, critic;
    Tensor log_std;
    Adam opt;
    // staged on-policy rollout
    std::vector<float> stage_obs, stage_crit, stage_next_crit, stage_reward, stage_logp, stage_action,
        stage_mask;
    std::vector<std::int64_t> stage_action_idx;
    std::vector<std::uint8_t> stage_done;
    int stage_steps = 0;

    void clear_stage() {
      stage_obs.clear();
      stage_crit.clear();
      stage_next_crit.clear();
      stage_reward.clear();
      stage_logp.clear();
      stage_action.clear();
      stage_mask.clear();
      stage_action_idx.clear();
      stage_done.clear();
      stage_steps = 0;
    }
  };

  // returns {policy_loss, value_loss, entropy} means over minibatches
  std::array<double, 3> train_group(Group& g, RngStream& rng) {
    if (g.stage_steps == 0) return {0.0, 0.0, 0.0};
    const std::size_t T = static_cast<std::size_t>(g.stage_steps);
    const std::size_t B = g.stage_done.size() / T;
    const std::size_t n = static_cast<std::size_t>(g.n);
    const std::size_t samples = T * B;

    // value estimates for GAE (no graph)
    std::vector<float> values, next_values;
    {
      NoGradGuard ng;
      Tensor rows(Shape{samples, n, static_cast<std::size_t>(g.dg)}, g.stage_crit);
      Tensor next_rows(Shape{samples, n, static_cast<std::size_t>(g.dg)}, g.stage_next_crit);
      values = g.critic->forward(rows).data();
      next_values = g.critic->forward(next_rows).data();
    }
    auto adv = gae(g.stage_reward, values, next_values, g.stage_done, T, B, n, ctx_.hp.gamma,
                   ctx_.hp.gae_lambda);

    // standardize advantages across the rollout
    double mean = 0.0, sq = 0.0;
    for (float a : adv.advantages) mean += a;
    mean /= static_cast<double>(adv.advantages.size());
    for (float a : adv.advantages) sq += (a - mean) * (a - mean);
    const double stddev = std::sqrt(sq / static_cast<double>(adv.advantages.size())) + 1e-8;
    std::vector<float> norm_adv(adv.advantages.size());
    for (std::size_t i = 0; i < norm_adv.size(); ++i)
      norm_adv[i] = static_cast<float>((adv.advantages[i] - mean) / stddev);

    std::vector<std::size_t> order(samples);
    for (std::size_t i = 0; i < samples; ++i) order[i] = i;

    const int mb_count = std::min<int>(ctx_.hp.minibatches, static_cast<int>(samples));
    double policy_acc = 0.0, value_acc = 0.0, entropy_acc = 0.0;
    int updates = 0;

    for (int epoch = 0; epoch < ctx_.hp.epochs; ++epoch) {
      // Fisher-Yates shuffle from the sampling stream
      for (std::size_t i = samples; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)));
        std::swap(order[i - 1], order[j]);
      }
      for (int mb = 0; mb < mb_count; ++mb) {
        const std::size_t lo = samples * mb / mb_count;
        const std::size_t hi = samples * (mb + 1) / mb_count;
        const std::size_t k = hi - lo;
        if (k == 0) continue;

        std::vector<float> mb_obs(k * n * g.d_obs), mb_crit(k * n * g.dg), mb_logp(k * n),
            mb_adv(k * n), mb_tgt(k * n);
        std::vector<float> mb_act(g.discrete ? 0 : k * n * g.d_act);
        std::vector<std::int64_t> mb_idx(g.discrete ? k * n : 0);
        std::vector<float> mb_mask(g.stage_mask.empty() ? 0 : k * n * g.n_actions);
        for (std::size_t r = 0; r < k; ++r) {
          const std::size_t s = order[lo + r];
          std::copy_n(g.stage_obs.begin() + s * n * g.d_obs, n * g.d_obs, mb_obs.begin() + r * n * g.d_obs);
          std::copy_n(g.stage_crit.begin() + s * n * g.dg, n * g.dg, mb_crit.begin() + r * n * g.dg);
          std::copy_n(g.stage_logp.begin() + s * n, n, mb_logp.begin() + r * n);
          std::copy_n(norm_adv.begin() + s * n, n, mb_adv.begin() + r * n);
          std::copy_n(adv.value_targets.begin() + s * n, n, mb_tgt.begin() + r * n);
          if (g.discrete) {
            std::copy_n(g.stage_action_idx.begin() + s * n, n, mb_idx.begin() + r * n);
            if (!g.stage_mask.empty())
              std::copy_n(g.stage_mask.begin() + s * n * g.n_actions, n * g.n_actions,
                          mb_mask.begin() + r * n * g.n_actions);
          } else {
            std::copy_n(g.stage_action.begin() + s * n * g.d_act, n * g.d_act,
                        mb_act.begin() + r * n * g.d_act);
          }
        }

        Tensor obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, mb_obs);
        Tensor crit_t(Shape{k, n, static_cast<std::size_t>(g.dg)}, mb_crit);
        Tensor logp_old(Shape{k, n}, mb_logp);
        Tensor adv_t(Shape{k, n}, mb_adv);
        Tensor tgt_t(Shape{k, n}, mb_tgt);

        Tensor head = g.actor->forward(obs_t);
        Tensor logp_new, entropy;
        if (g.discrete) {
          Tensor logits = mask_logits(head, mb_mask);
          logp_new = categorical_log_prob(logits, mb_idx);
          entropy = categorical_entropy(logits);
        } else {
          Tensor act_t(Shape{k, n, static_cast<std::size_t>(g.d_act)}, mb_act);
          logp_new = squashed_gaussian_logprob_t(head, g.log_std, act_t);
          entropy = gaussian_entropy(g.log_std, Shape{k, n, static_cast<std::size_t>(g.d_act)});
        }

        Tensor ratio = (logp_new - logp_old).exp();
        Tensor surr1 = ratio * adv_t;
        Tensor surr2 = ratio.clamp(1.0f - static_cast<float>(ctx_.hp.ppo_clip),
                                   1.0f + static_cast<float>(ctx_.hp.ppo_clip)) *
                       adv_t;
        Tensor policy_loss = -(minimum(surr1, surr2).mean_all());
        Tensor values_t = g.critic->forward(crit_t).reshape({k, n});
        Tensor diff = values_t - tgt_t;
        Tensor value_loss = (diff * diff).mean_all();
        Tensor entropy_mean = entropy.mean_all();
        Tensor total = policy_loss + value_loss - static_cast<float>(ctx_.hp.entropy_coef) * entropy_mean;

        g.opt.zero_grad();
        total.backward();
        if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt.params(), ctx_.hp.grad_clip);
        g.opt.step();

        policy_acc += policy_loss.item();
        value_acc += value_loss.item();
        entropy_acc += entropy_mean.item();
        ++updates;
      }
    }
    const double inv = updates > 0 ? 1.0 / updates : 0.0;
    return {policy_acc * inv, value_acc * inv, entropy_acc * inv};
  }

  std::vector<Group> groups_;
};

}  // namespace

std::unique_ptr<Algorithm> make_ppo(const AlgoContext& ctx, RngStream& init_rng) {
  return std::make_unique<PpoAlgorithm>(ctx, init_rng);
}

}  // namespace marlbench::algorithms
