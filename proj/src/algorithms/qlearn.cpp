#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "marlbench/algorithms/algorithm.hpp"
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

enum class MixerKind { None, Vdn, Qmix };

// Deep Q-learning over grouped agents with optional value factorization:
// identity (iql), sum (vdn), or a monotonic state-conditioned mixer (qmix).
// iql regresses per-agent utilities on per-agent rewards; the factorized
// variants regress the mixed value on the team (mean over agents) reward.
class QLearnAlgorithm final : public Algorithm {
 public:
  QLearnAlgorithm(const AlgoContext& ctx, RngStream& rng) : Algorithm(ctx) {
    if (ctx_.variant != ActionVariant::Discrete)
      throw std::invalid_argument(ctx_.desc.name + " supports discrete actions only");
    mixer_kind_ = ctx_.desc.name == "vdn" ? MixerKind::Vdn
                  : ctx_.desc.name == "qmix" ? MixerKind::Qmix
                                             : MixerKind::None;
    for (const auto& gs : ctx_.groups) {
      Group g;
      g.n = gs.n_agents();
      g.d_obs = gs.observation.feature_dim();
      g.n_actions = gs.action.n;
      auto out_spec = DomainSpec::continuous({g.n_actions}, -1e9, 1e9);
      g.qnet = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_actor,
                                   gs.observation, out_spec, rng);
      RngStream throwaway(1);
      g.qnet_target = models::instantiate(ctx_.model_config, InstMode::Decentralized, g.n, ctx_.share_actor,
                                          gs.observation, out_spec, throwaway);
      models::copy_parameters(*g.qnet, *g.qnet_target);
      for (auto& p : g.qnet_target->parameters()) p.tensor.set_requires_grad(false);

      std::vector<Param> params;
      for (auto& p : g.qnet->parameters()) params.push_back({"qnet." + p.name, p.tensor});
      if (mixer_kind_ == MixerKind::Qmix) {
        g.mixer = QmixMixer(g.n, ctx_.d_state, /*hidden=*/32, rng);
        RngStream throwaway2(2);
        g.mixer_target = QmixMixer(g.n, ctx_.d_state, 32, throwaway2);
        soft_update_params(g.mixer.parameters(), g.mixer_target.parameters(), 1.0);
        for (auto& p : g.mixer_target.parameters())
          const_cast<Tensor&>(p.tensor).set_requires_grad(false);
        for (auto& p : g.mixer.parameters()) params.push_back(p);
      }
      g.opt = Adam(params, ctx_.hp.lr);

      ReplayBuffer::Layout layout;
      layout.capacity = ctx_.hp.buffer_capacity;
      layout.n_agents = g.n;
      layout.d_obs = g.d_obs;
      layout.n_actions = g.n_actions;
      layout.maskable = gs.action.maskable;
      layout.d_state = ctx_.d_state;
      g.buffer = ReplayBuffer(layout);
      groups_.push_back(std::move(g));
    }
  }

  ActOutput act(const std::vector<std::vector<float>>& obs, const std::vector<std::vector<float>>& masks,
                const std::vector<float>&, int B, std::int64_t frames, RngStream& rng) override {
    NoGradGuard ng;
    const double eps = ctx_.hp.epsilon_at(frames);
    ActOutput out;
    out.actions.resize(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      auto& g = groups_[gi];
      const std::size_t rows = static_cast<std::size_t>(B) * g.n;
      Tensor obs_t(Shape{static_cast<std::size_t>(B), static_cast<std::size_t>(g.n),
                         static_cast<std::size_t>(g.d_obs)},
                   obs[gi]);
      const std::vector<float> q = g.qnet->forward(obs_t).data();
      out.actions[gi].discrete = epsilon_greedy(q, eps, masks[gi], rows, g.n_actions, rng);
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
      const std::vector<float> q = g.qnet->forward(obs_t).data();
      actions[gi].discrete = masked_argmax(q, masks[gi], rows, g.n_actions);
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
      double acc = 0.0;
      int updates = 0;
      const bool skip = (gi < frozen.size() && frozen[gi]) || g.buffer.size() < ctx_.hp.batch_size;
      if (!skip) {
        for (int step = 0; step < ctx_.off_policy_train_steps; ++step) {
          acc += train_step(g, rng);
          ++updates;
        }
      }
      report.entries.push_back(
          {ctx_.groups[gi].name + "/q_loss", updates > 0 ? acc / updates : 0.0});
    }
    return report;
  }

  std::vector<std::string> loss_names() const override {
    std::vector<std::string> names;
    for (const auto& g : ctx_.groups) names.push_back(g.name + "/q_loss");
    return names;
  }

  std::int64_t buffer_size(std::size_t group) const override { return groups_.at(group).buffer.size(); }

  std::vector<Param> named_parameters() const override {
    std::vector<Param> out;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const std::string prefix = ctx_.groups[gi].name + ".";
      for (auto& p : groups_[gi].qnet->parameters()) out.push_back({prefix + "qnet." + p.name, p.tensor});
      for (auto& p : groups_[gi].qnet_target->parameters())
        out.push_back({prefix + "qnet_target." + p.name, p.tensor});
      if (mixer_kind_ == MixerKind::Qmix) {
        for (auto& p : groups_[gi].mixer.parameters()) out.push_back({prefix + p.name, p.tensor});
        for (auto& p : groups_[gi].mixer_target.parameters())
          out.push_back({prefix + "target." + p.name, p.tensor});
      }
    }
    return out;
  }

  void save(std::ostream& os) const override {
    save_params(os, named_parameters());
    for (const auto& g : groups_) {
      save_adam(os, g.opt);
      g.buffer.save(os);
      binio::write_pod<std::int64_t>(os, g.update_count);
    }
  }

  void load(std::istream& is) override {
    load_params(is, named_parameters());
    for (auto& g : groups_) {
      load_adam(is, g.opt);
      g.buffer.load(is);
      g.update_count = binio::read_pod<std::int64_t>(is);
    }
  }

 private:
  struct Group {
    int n = 1, d_obs = 0, n_actions = 0;
    models::ModelPtr qnet, qnet_target;
    QmixMixer mixer, mixer_target;
    Adam opt;
    ReplayBuffer buffer;
    std::int64_t update_count = 0;
  };

  double train_step(Group& g, RngStream& rng) {
    auto s = g.buffer.sample(ctx_.hp.batch_size, rng);
    const std::size_t k = s.count;
    const std::size_t n = static_cast<std::size_t>(g.n);
    const std::size_t rows = k * n;

    // bootstrap: max legal target utility per agent
    std::vector<float> q_next_max;
    {
      NoGradGuard ng;
      Tensor next_obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.next_obs);
      const std::vector<float> qn = g.qnet_target->forward(next_obs_t).data();
      q_next_max = masked_max(qn, s.next_mask, rows, g.n_actions);
    }

    Tensor obs_t(Shape{k, n, static_cast<std::size_t>(g.d_obs)}, s.obs);
    Tensor q_all = g.qnet->forward(obs_t);
    Tensor q_chosen = gather(q_all, 2, s.action_index);  // [k, n]

    Tensor loss;
    if (mixer_kind_ == MixerKind::None) {
      std::vector<float> y(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const double not_done = s.done[r / n] ? 0.0 : 1.0;
        y[r] = static_cast<float>(s.reward[r] + ctx_.hp.gamma * not_done * q_next_max[r]);
      }
      Tensor diff = q_chosen - Tensor(Shape{k, n}, y);
      loss = (diff * diff).mean_all();
    } else {
      // team reward: mean over the agents of the group
      std::vector<float> team_r(k, 0.0f);
      for (std::size_t b = 0; b < k; ++b) {
        for (std::size_t i = 0; i < n; ++i) team_r[b] += s.reward[b * n + i];
        team_r[b] /= static_cast<float>(n);
      }
      std::vector<float> y(k);
      if (mixer_kind_ == MixerKind::Vdn) {
        for (std::size_t b = 0; b < k; ++b) {
          double tot = 0.0;
          for (std::size_t i = 0; i < n; ++i) tot += q_next_max[b * n + i];
          const double not_done = s.done[b] ? 0.0 : 1.0;
          y[b] = static_cast<float>(team_r[b] + ctx_.hp.gamma * not_done * tot);
        }
        Tensor q_tot = vdn_mix(q_chosen);
        Tensor diff = q_tot - Tensor(Shape{k}, y);
        loss = (diff * diff).mean_all();
      } else {
        Tensor next_state_t(Shape{k, static_cast<std::size_t>(ctx_.d_state)}, s.next_state);
        {
          NoGradGuard ng;
          Tensor mixed =
              g.mixer_target.mix(Tensor(Shape{k, n}, q_next_max), next_state_t);
          const auto& m = mixed.data();
          for (std::size_t b = 0; b < k; ++b) {
            const double not_done = s.done[b] ? 0.0 : 1.0;
            y[b] = static_cast<float>(team_r[b] + ctx_.hp.gamma * not_done * m[b]);
          }
        }
        Tensor state_t(Shape{k, static_cast<std::size_t>(ctx_.d_state)}, s.state);
        Tensor q_tot = g.mixer.mix(q_chosen, state_t);
        Tensor diff = q_tot - Tensor(Shape{k}, y);
        loss = (diff * diff).mean_all();
      }
    }

    g.opt.zero_grad();
    loss.backward();
    if (ctx_.hp.grad_clip > 0.0) num::clip_grad_norm(g.opt.params(), ctx_.hp.grad_clip);
    g.opt.step();

    ++g.update_count;
    if (g.update_count % ctx_.hp.target_update_period == 0) {
      models::soft_update(*g.qnet, *g.qnet_target, ctx_.hp.tau);
      if (mixer_kind_ == MixerKind::Qmix)
        soft_update_params(g.mixer.parameters(), g.mixer_target.parameters(), ctx_.hp.tau);
    }
    return loss.item();
  }

  MixerKind mixer_kind_ = MixerKind::None;
  std::vector<Group> groups_;
};

}  // namespace

std::unique_ptr<Algorithm> make_qlearn(const AlgoContext& ctx, RngStream& init_rng) {
  return std::make_unique<QLearnAlgorithm>(ctx, init_rng);
}

}  // namespace marlbench::algorithms
