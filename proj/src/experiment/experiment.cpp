#include "marlbench/experiment/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "marlbench/core/binio.hpp"
#include "marlbench/core/errors.hpp"
#include "marlbench/experiment/checkpoint.hpp"

namespace marlbench::experiment {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '/') c = '-';
  return out;
}

}  // namespace

EvalResult evaluate_policy(const PolicyFn& policy, const envs::TaskDef& task, envs::ActionVariant variant,
                           int episodes, int max_steps, std::uint64_t seed,
                           envs::TransformPipeline* frozen_transforms) {
  auto env = envs::make_env(task, variant, episodes, seed);
  const auto& specs = env->group_specs();
  const std::size_t G = specs.size();

  EvalResult res;
  res.per_episode_returns.assign(G, std::vector<double>(episodes, 0.0));
  res.mean_return.assign(G, 0.0);
  res.per_agent_return.resize(G);
  for (std::size_t g = 0; g < G; ++g) res.per_agent_return[g].assign(specs[g].n_agents(), 0.0);
  res.episode_lengths.assign(episodes, max_steps);

  std::vector<std::uint8_t> finished(episodes, 0);
  int remaining = episodes;

  for (int step = 0; step < max_steps && remaining > 0; ++step) {
    std::vector<std::vector<float>> obs(G), masks(G);
    for (std::size_t g = 0; g < G; ++g) {
      obs[g] = env->current_obs(g);
      if (frozen_transforms)
        frozen_transforms->process_obs(g, obs[g], specs[g].n_agents(), specs[g].observation.feature_dim());
      masks[g] = env->current_mask(g);
    }
    envs::Actions actions = policy(obs, masks, episodes);
    envs::StepBatch batch = env->step(actions);
    for (int b = 0; b < episodes; ++b) {
      if (finished[b]) continue;
      for (std::size_t g = 0; g < G; ++g) {
        const int n = specs[g].n_agents();
        double mean_r = 0.0;
        for (int i = 0; i < n; ++i) {
          const double r = batch.groups[g].reward[static_cast<std::size_t>(b) * n + i];
          res.per_agent_return[g][i] += r;
          mean_r += r;
        }
        res.per_episode_returns[g][b] += mean_r / n;
      }
      if (batch.done[b]) {
        finished[b] = 1;
        res.episode_lengths[b] = step + 1;
        --remaining;
      }
    }
  }

  for (std::size_t g = 0; g < G; ++g) {
    double acc = 0.0;
    for (double r : res.per_episode_returns[g]) acc += r;
    res.mean_return[g] = acc / episodes;
    for (double& r : res.per_agent_return[g]) r /= episodes;
  }
  return res;
}

EvalResult random_policy_eval(const envs::TaskDef& task, envs::ActionVariant variant, int episodes,
                              int max_steps, std::uint64_t seed) {
  auto rng = std::make_shared<num::RngStream>(num::derive_seed(seed, "random_policy"));
  // the uniform policy needs the action specs; probe them from the task
  auto probe = envs::make_env(task, variant, 1, seed);
  const auto specs = probe->group_specs();
  probe.reset();
  PolicyFn policy = [rng, specs](const std::vector<std::vector<float>>& /*obs*/,
                                 const std::vector<std::vector<float>>& masks, int B) {
    envs::Actions actions(specs.size());
    for (std::size_t g = 0; g < specs.size(); ++g) {
      const int n = specs[g].n_agents();
      if (specs[g].action.kind == envs::DomainSpec::Kind::Continuous) {
        const int d = specs[g].action.feature_dim();
        auto& a = actions[g].continuous;
        a.resize(static_cast<std::size_t>(B) * n * d);
        for (auto& v : a)
          v = static_cast<float>(rng->uniform(specs[g].action.low, specs[g].action.high));
      } else {
        const int A = specs[g].action.n;
        auto& a = actions[g].discrete;
        a.resize(static_cast<std::size_t>(B) * n);
        for (std::size_t r = 0; r < a.size(); ++r) {
          if (masks[g].empty()) {
            a[r] = rng->uniform_int(A);
          } else {
            std::vector<std::int64_t> legal;
            for (int act = 0; act < A; ++act)
              if (masks[g][r * A + act] != 0.0f) legal.push_back(act);
            a[r] = legal[static_cast<std::size_t>(rng->uniform_int(static_cast<std::int64_t>(legal.size())))];
          }
        }
      }
    }
    return actions;
  };
  return evaluate_policy(policy, task, variant, episodes, max_steps, seed);
}

std::string Experiment::run_dir_name(const std::string& algo, const std::string& task_id,
                                     const std::string& model, std::uint64_t seed) {
  return sanitize(algo) + "_" + sanitize(task_id) + "_" + sanitize(model) + "/seed_" + std::to_string(seed);
}

Experiment::Experiment(config::RunBundle bundle, std::string run_dir, Callbacks callbacks)
    : bundle_(std::move(bundle)), run_dir_(std::move(run_dir)), callbacks_(std::move(callbacks)) {
  const auto& desc = algorithms::descriptor_for(bundle_.algo_name);
  try {
    variant_ = algorithms::match_compatibility(desc, bundle_.task);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  RngStreams streams = derive_rng_streams(bundle_.seed);
  collection_rng_ = streams.collection;
  buffer_rng_ = streams.buffer_sampling;

  env_ = envs::make_env(bundle_.task, variant_, bundle_.experiment.n_vector_envs,
                        num::derive_seed(bundle_.seed, "env"));

  std::vector<std::shared_ptr<envs::Transform>> ts;
  if (bundle_.experiment.obs_norm) ts.push_back(std::make_shared<envs::ObsNormalize>());
  if (bundle_.experiment.reward_scale != 1.0)
    ts.push_back(std::make_shared<envs::RewardScale>(bundle_.experiment.reward_scale));
  transforms_ = envs::TransformPipeline(std::move(ts), env_->group_specs());

  algorithms::AlgoContext ctx;
  ctx.desc = desc;
  ctx.hp = bundle_.hp;
  ctx.model_config = bundle_.model;
  ctx.share_actor = bundle_.experiment.share_params_actor;
  ctx.share_critic = bundle_.experiment.share_params_critic;
  ctx.groups = transforms_.specs();
  ctx.variant = variant_;
  ctx.d_state = env_->has_global_state() ? ctx.groups[0].state->feature_dim() : 0;
  ctx.n_envs = bundle_.experiment.n_vector_envs;
  ctx.frames_per_iteration = bundle_.experiment.frames_per_iteration;
  ctx.off_policy_train_steps = bundle_.experiment.off_policy_train_steps;
  try {
    algo_ = algorithms::make_algorithm(ctx, streams.init);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  record_.environment = bundle_.task.env_name;
  record_.algorithm = bundle_.algo_name;
  record_.task = bundle_.task.name;
  record_.run_id = "seed_" + std::to_string(bundle_.seed);
}

Experiment::~Experiment() = default;

std::int64_t Experiment::total_iterations() const {
  const auto fpi = static_cast<std::int64_t>(bundle_.experiment.frames_per_iteration);
  return (bundle_.experiment.total_frames + fpi - 1) / fpi;
}

void Experiment::extend_total_frames(std::int64_t additional) {
  if (additional < 0) throw ConfigError("additional frames must be >= 0");
  bundle_.experiment.total_frames += additional;
  bundle_.tree.at("experiment.total_frames").i = bundle_.experiment.total_frames;
}

void Experiment::collect_iteration() {
  const int B = bundle_.experiment.n_vector_envs;
  const int steps = bundle_.experiment.frames_per_iteration / B;
  const auto& specs = transforms_.specs();
  const std::size_t G = specs.size();
  for (int step = 0; step < steps; ++step) {
    std::vector<std::vector<float>> obs(G), masks(G);
    for (std::size_t g = 0; g < G; ++g) {
      obs[g] = env_->current_obs(g);
      transforms_.process_obs(g, obs[g], specs[g].n_agents(), specs[g].observation.feature_dim());
      masks[g] = env_->current_mask(g);
    }
    const std::vector<float>& state = env_->current_state();
    auto aout = algo_->act(obs, masks, state, B, frames_, collection_rng_);
    auto batch = env_->step(aout.actions);
    transforms_.apply(batch);
    algo_->observe(batch, aout);
    frames_ += B;
  }
}

void Experiment::check_losses_finite(const algorithms::LossReport& losses) const {
  for (const auto& [name, value] : losses.entries)
    if (!std::isfinite(value))
      throw RuntimeFailure("iteration " + std::to_string(iteration_) + ": loss '" + name +
                           "' is non-finite (" + std::to_string(value) + ")");
}

std::vector<double> Experiment::run_evaluation() {
  PolicyFn policy = [this](const std::vector<std::vector<float>>& obs,
                           const std::vector<std::vector<float>>& masks, int B) {
    return algo_->act_eval(obs, masks, B);
  };
  envs::TransformPipeline eval_pipeline = transforms_;
  eval_pipeline.set_frozen(true);
  auto res = evaluate_policy(policy, bundle_.task, variant_, bundle_.experiment.eval_episodes,
                             bundle_.experiment.max_eval_steps,
                             num::derive_seed(bundle_.seed, "evaluation", static_cast<std::uint64_t>(iteration_)),
                             &eval_pipeline);
  reporting::EvalPoint point;
  point.step_count = frames_;
  point.returns = res.per_episode_returns[0];
  record_.points.push_back(point);
  record_.absolute_metrics = res.per_episode_returns[0];
  write_runs_file();
  return res.mean_return;
}

void Experiment::write_runs_file() const {
  reporting::write_runs_json(run_dir_ + "/runs.json", {record_});
}

void Experiment::emit_metrics_row(const algorithms::LossReport& losses,
                                  const std::vector<double>* eval_returns) {
  std::ofstream file(run_dir_ + "/metrics.csv", std::ios::app);
  if (!file) throw RuntimeFailure("cannot write metrics.csv under " + run_dir_);
  if (!metrics_header_written_) {
    file << "iteration,frames";
    for (const auto& name : algo_->loss_names()) file << "," << name;
    for (const auto& g : transforms_.specs()) file << "," << g.name << "/eval_return";
    file << "\n";
    metrics_header_written_ = true;
  }
  file << iteration_ << "," << frames_;
  for (const auto& [name, value] : losses.entries) file << "," << fmt_double(value);
  for (std::size_t g = 0; g < transforms_.specs().size(); ++g) {
    file << ",";
    if (eval_returns) file << fmt_double((*eval_returns)[g]);
  }
  file << "\n";
}

void Experiment::run() {
  const std::int64_t total_iters = total_iterations();
  fs::create_directories(run_dir_ + "/checkpoints");
  if (iteration_ == 0) {
    config::write_snapshot(bundle_.tree, run_dir_ + "/config_snapshot.yaml");
    std::ofstream(run_dir_ + "/metrics.csv", std::ios::trunc);
    metrics_header_written_ = false;
    CallbackView view{0, 0, nullptr, nullptr};
    if (callbacks_.on_setup) callbacks_.on_setup(view, control_);
  }

  while (iteration_ < total_iters) {
    ++iteration_;
    collect_iteration();
    if (callbacks_.on_batch_collected) {
      CallbackView view{iteration_, frames_, nullptr, nullptr};
      callbacks_.on_batch_collected(view, control_);
    }

    std::vector<bool> frozen;
    for (const auto& g : transforms_.specs()) frozen.push_back(control_.is_frozen(g.name));
    auto losses = algo_->train(frames_, buffer_rng_, frozen);
    check_losses_finite(losses);
    if (callbacks_.on_train_step) {
      CallbackView view{iteration_, frames_, &losses, nullptr};
      callbacks_.on_train_step(view, control_);
    }

    std::vector<double> eval_returns;
    bool did_eval = false;
    if (iteration_ % bundle_.experiment.eval_interval == 0 || iteration_ == total_iters) {
      eval_returns = run_evaluation();
      did_eval = true;
      if (callbacks_.on_evaluation_end) {
        CallbackView view{iteration_, frames_, nullptr, &eval_returns};
        callbacks_.on_evaluation_end(view, control_);
      }
    }
    emit_metrics_row(losses, did_eval ? &eval_returns : nullptr);

    if (bundle_.experiment.checkpoint_interval > 0 &&
        iteration_ % bundle_.experiment.checkpoint_interval == 0 && iteration_ != total_iters)
      save_checkpoint(run_dir_ + "/checkpoints/ckpt_" + std::to_string(iteration_));
  }

  save_checkpoint(run_dir_ + "/checkpoints/ckpt_" + std::to_string(total_iters));
  if (callbacks_.on_train_end) {
    CallbackView view{iteration_, frames_, nullptr, nullptr};
    callbacks_.on_train_end(view, control_);
  }
}

EvalResult Experiment::evaluate_now(int episodes, std::uint64_t eval_seed) {
  PolicyFn policy = [this](const std::vector<std::vector<float>>& obs,
                           const std::vector<std::vector<float>>& masks, int B) {
    return algo_->act_eval(obs, masks, B);
  };
  envs::TransformPipeline eval_pipeline = transforms_;
  eval_pipeline.set_frozen(true);
  return evaluate_policy(policy, bundle_.task, variant_, episodes, bundle_.experiment.max_eval_steps,
                         eval_seed, &eval_pipeline);
}

void Experiment::save_checkpoint(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw RuntimeFailure("cannot write checkpoint: " + path);
    write_checkpoint_header(os);
    binio::write_string(os, config::snapshot_string(bundle_.tree));
    binio::write_pod(os, iteration_);
    binio::write_pod(os, frames_);
    binio::write_string(os, collection_rng_.serialize());
    binio::write_string(os, buffer_rng_.serialize());
    env_->save_state(os);
    transforms_.save(os);
    algo_->save(os);
    const auto& specs = transforms_.specs();
    binio::write_pod<std::uint64_t>(os, specs.size());
    for (const auto& g : specs) binio::write_pod<std::uint8_t>(os, control_.is_frozen(g.name) ? 1 : 0);
    binio::write_pod<std::uint32_t>(os, kCheckpointSentinel);
    if (!os) throw RuntimeFailure("failed while writing checkpoint: " + path);
  }
  fs::rename(tmp, path);
}

void Experiment::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  read_checkpoint_header(is, path);
  try {
    const std::string snapshot = binio::read_string(is);
    const auto tree = config::parse_snapshot_string(snapshot);
    if (tree != bundle_.tree)
      throw ConfigError("checkpoint " + path + " was written under a different configuration");
    iteration_ = binio::read_pod<std::int64_t>(is);
    frames_ = binio::read_pod<std::int64_t>(is);
    collection_rng_.deserialize(binio::read_string(is));
    buffer_rng_.deserialize(binio::read_string(is));
    env_->load_state(is);
    transforms_.load(is);
    algo_->load(is);
    const auto n_groups = binio::read_pod<std::uint64_t>(is);
    const auto& specs = transforms_.specs();
    if (n_groups != specs.size()) throw ConfigError("corrupt checkpoint: group count mismatch");
    for (std::size_t g = 0; g < specs.size(); ++g) {
      if (binio::read_pod<std::uint8_t>(is))
        control_.freeze_group(specs[g].name);
      else
        control_.unfreeze_group(specs[g].name);
    }
    if (binio::read_pod<std::uint32_t>(is) != kCheckpointSentinel)
      throw ConfigError("corrupt checkpoint: bad trailer in " + path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw ConfigError("corrupt checkpoint " + path + ": " + e.what());
  }
  metrics_header_written_ = true;

  // pick up prior evaluation history for consistent runs.json appends
  const std::string runs_path = run_dir_ + "/runs.json";
  if (fs::exists(runs_path)) {
    for (auto& r : reporting::read_runs_json(runs_path)) {
      if (r.run_id == record_.run_id && r.algorithm == record_.algorithm && r.task == record_.task) {
        record_ = r;
        break;
      }
    }
  }
}

}  // namespace marlbench::experiment
