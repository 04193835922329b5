#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace marlbench::algorithms {

struct AlgoHyperparams {
  double gamma = 0.99;
  double gae_lambda = 0.9;
  double ppo_clip = 0.2;
  double entropy_coef = 0.001;
  double tau = 0.005;
  double sac_alpha = 0.2;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t anneal_frames = 0;  // 0: resolved to half the total frames at load time
  double lr = 3e-4;
  int minibatches = 4;
  int epochs = 4;
  int target_update_period = 1;
  double ddpg_sigma = 0.1;
  std::int64_t buffer_capacity = 100000;
  int batch_size = 256;
  double grad_clip = 0.5;  // 0 disables clipping

  void validate() const {
    auto fail = [](const char* msg) { throw std::invalid_argument(std::string("hyperparams: ") + msg); };
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must be in [0, 1]");
    if (!(ppo_clip > 0.0)) fail("ppo_clip must be > 0");
    if (!(entropy_coef >= 0.0)) fail("entropy_coef must be >= 0");
    if (!(tau > 0.0 && tau <= 1.0)) fail("tau must be in (0, 1]");
    if (!(sac_alpha > 0.0)) fail("sac_alpha must be > 0");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start must be in [0, 1]");
    if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) fail("epsilon_end must be in [0, 1]");
    if (anneal_frames < 0) fail("anneal_frames must be >= 0");
    if (!(lr > 0.0)) fail("lr must be > 0");
    if (minibatches < 1) fail("minibatches must be >= 1");
    if (epochs < 1) fail("epochs must be >= 1");
    if (target_update_period < 1) fail("target_update_period must be >= 1");
    if (!(ddpg_sigma >= 0.0)) fail("ddpg_sigma must be >= 0");
    if (buffer_capacity < 1) fail("buffer_capacity must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(grad_clip >= 0.0)) fail("grad_clip must be >= 0");
    for (double v : {gamma, gae_lambda, ppo_clip, entropy_coef, tau, sac_alpha, lr, ddpg_sigma, grad_clip})
      if (!std::isfinite(v)) fail("values must be finite");
  }

  // Linear epsilon annealing by collected frames.
  double epsilon_at(std::int64_t frames) const {
    if (anneal_frames <= 0) return epsilon_end;
    const double t = std::min(1.0, static_cast<double>(frames) / static_cast<double>(anneal_frames));
    return epsilon_start + (epsilon_end - epsilon_start) * t;
  }
};

}  // namespace marlbench::algorithms
