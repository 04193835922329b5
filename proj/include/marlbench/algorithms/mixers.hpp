#pragma once

#include <cstdint>
#include <vector>

#include "marlbench/models/model.hpp"
#include "marlbench/numeric/optim.hpp"
#include "marlbench/numeric/rng.hpp"
#include "marlbench/numeric/tensor.hpp"

namespace marlbench::algorithms {

using num::Param;
using num::Tensor;

// Sum the per-agent utilities: q_tot = sum_i q_i.
Tensor vdn_mix(const Tensor& q_agents /* [B, n] */);

// Two-layer monotonic mixing network. Layer weights come from hypernetworks
// of the global state and pass through an absolute value, so
// dq_tot/dq_i >= 0 everywhere; biases are unconstrained.
class QmixMixer {
 public:
  QmixMixer() = default;
  QmixMixer(int n_agents, int d_state, int hidden, num::RngStream& init_rng);

  Tensor mix(const Tensor& q_agents /* [B, n] */, const Tensor& state /* [B, d_state] */) const;

  std::vector<Param> parameters() const;

  int n_agents() const { return n_agents_; }
  int hidden() const { return hidden_; }

  // Exposed for tests that pin the hypernetwork outputs.
  models::LinearLayer& hyper_w1() { return hyper_w1_; }
  models::LinearLayer& hyper_b1() { return hyper_b1_; }
  models::LinearLayer& hyper_w2() { return hyper_w2_; }
  models::LinearLayer& hyper_b2_hidden() { return hyper_b2_hidden_; }
  models::LinearLayer& hyper_b2_out() { return hyper_b2_out_; }

 private:
  int n_agents_ = 0;
  int d_state_ = 0;
  int hidden_ = 0;
  models::LinearLayer hyper_w1_;        // state -> n*h
  models::LinearLayer hyper_b1_;        // state -> h
  models::LinearLayer hyper_w2_;        // state -> h
  models::LinearLayer hyper_b2_hidden_; // state -> h (relu)
  models::LinearLayer hyper_b2_out_;    // h -> 1
};

// Greedy action per agent restricted to legal entries; ties break to the
// lowest index. q is [rows, A]; mask may be empty (all legal).
std::vector<std::int64_t> masked_argmax(const std::vector<float>& q, const std::vector<float>& mask,
                                        std::size_t rows, std::size_t n_actions);

// Maximum legal q per row (bootstrap target helper).
std::vector<float> masked_max(const std::vector<float>& q, const std::vector<float>& mask, std::size_t rows,
                              std::size_t n_actions);

// Epsilon-greedy over legal actions: with probability eps a uniform legal
// action, otherwise the legal argmax. Throws if a row has no legal action.
std::vector<std::int64_t> epsilon_greedy(const std::vector<float>& q, double eps,
                                         const std::vector<float>& mask, std::size_t rows,
                                         std::size_t n_actions, num::RngStream& rng);

}  // namespace marlbench::algorithms
