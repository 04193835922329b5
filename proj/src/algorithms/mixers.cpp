#include "marlbench/algorithms/mixers.hpp"

#include <cmath>
#include <stdexcept>

namespace marlbench::algorithms {

using num::RngStream;
using num::Shape;

Tensor vdn_mix(const Tensor& q_agents) {
  if (q_agents.ndim() != 2) throw std::invalid_argument("vdn_mix: expected [B, n]");
  return q_agents.sum(1);
}

namespace {

models::LinearLayer make_hyper_linear(int d_in, int d_out, RngStream& rng) {
  const double bound = std::sqrt(1.0 / d_in);
  auto init = [&](Shape shape) {
    std::vector<float> vals(num::shape_size(shape));
    for (auto& v : vals) v = static_cast<float>(rng.uniform(-bound, bound));
    Tensor t(std::move(shape), std::move(vals));
    t.set_requires_grad(true);
    return t;
  };
  models::LinearLayer layer;
  layer.stacked = false;
  layer.weight = init({static_cast<std::size_t>(d_in), static_cast<std::size_t>(d_out)});
  layer.bias = init({static_cast<std::size_t>(d_out)});
  return layer;
}

}  // namespace

QmixMixer::QmixMixer(int n_agents, int d_state, int hidden, RngStream& init_rng)
    : n_agents_(n_agents), d_state_(d_state), hidden_(hidden) {
  if (d_state < 1)
    throw std::invalid_argument("qmix mixer: the task provides no global state");
  hyper_w1_ = make_hyper_linear(d_state, n_agents * hidden, init_rng);
  hyper_b1_ = make_hyper_linear(d_state, hidden, init_rng);
  hyper_w2_ = make_hyper_linear(d_state, hidden, init_rng);
  hyper_b2_hidden_ = make_hyper_linear(d_state, hidden, init_rng);
  hyper_b2_out_ = make_hyper_linear(hidden, 1, init_rng);
}

Tensor QmixMixer::mix(const Tensor& q_agents, const Tensor& state) const {
  if (q_agents.ndim() != 2 || static_cast<int>(q_agents.shape()[1]) != n_agents_)
    throw std::invalid_argument("qmix mix: expected q [B, " + std::to_string(n_agents_) + "]");
  if (state.ndim() != 2 || static_cast<int>(state.shape()[1]) != d_state_)
    throw std::invalid_argument("qmix mix: expected state [B, " + std::to_string(d_state_) + "]");
  const std::size_t B = q_agents.shape()[0];
  const std::size_t n = static_cast<std::size_t>(n_agents_);
  const std::size_t h = static_cast<std::size_t>(hidden_);

  Tensor w1 = hyper_w1_.apply(state).abs().reshape({B, n, h});
  Tensor b1 = hyper_b1_.apply(state);
  Tensor hidden = (matmul(q_agents.reshape({B, 1, n}), w1).reshape({B, h}) + b1).elu();
  Tensor w2 = hyper_w2_.apply(state).abs().reshape({B, h, 1});
  Tensor b2 = hyper_b2_out_.apply(hyper_b2_hidden_.apply(state).relu());
  Tensor q_tot = matmul(hidden.reshape({B, 1, h}), w2).reshape({B, 1}) + b2;
  return q_tot.reshape({B});
}

std::vector<Param> QmixMixer::parameters() const {
  return {
      {"mixer.hyper_w1.w", hyper_w1_.weight}, {"mixer.hyper_w1.b", hyper_w1_.bias},
      {"mixer.hyper_b1.w", hyper_b1_.weight}, {"mixer.hyper_b1.b", hyper_b1_.bias},
      {"mixer.hyper_w2.w", hyper_w2_.weight}, {"mixer.hyper_w2.b", hyper_w2_.bias},
      {"mixer.hyper_b2h.w", hyper_b2_hidden_.weight}, {"mixer.hyper_b2h.b", hyper_b2_hidden_.bias},
      {"mixer.hyper_b2o.w", hyper_b2_out_.weight}, {"mixer.hyper_b2o.b", hyper_b2_out_.bias},
  };
}

std::vector<std::int64_t> masked_argmax(const std::vector<float>& q, const std::vector<float>& mask,
                                        std::size_t rows, std::size_t n_actions) {
  std::vector<std::int64_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* qr = q.data() + r * n_actions;
    std::int64_t best = -1;
    for (std::size_t a = 0; a < n_actions; ++a) {
      if (!mask.empty() && mask[r * n_actions + a] == 0.0f) continue;
      if (best < 0 || qr[a] > qr[best]) best = static_cast<std::int64_t>(a);
    }
    if (best < 0) throw std::invalid_argument("masked_argmax: row with no legal action");
    out[r] = best;
  }
  return out;
}

std::vector<float> masked_max(const std::vector<float>& q, const std::vector<float>& mask, std::size_t rows,
                              std::size_t n_actions) {
  auto idx = masked_argmax(q, mask, rows, n_actions);
  std::vector<float> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = q[r * n_actions + static_cast<std::size_t>(idx[r])];
  return out;
}

std::vector<std::int64_t> epsilon_greedy(const std::vector<float>& q, double eps,
                                         const std::vector<float>& mask, std::size_t rows,
                                         std::size_t n_actions, num::RngStream& rng) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("epsilon_greedy: eps outside [0, 1]");
  std::vector<std::int64_t> greedy = masked_argmax(q, mask, rows, n_actions);
  std::vector<std::int64_t> out(rows);
  std::vector<std::int64_t> legal;
  for (std::size_t r = 0; r < rows; ++r) {
    if (eps > 0.0 && rng.uniform() < eps) {
      legal.clear();
      for (std::size_t a = 0; a < n_actions; ++a)
        if (mask.empty() || mask[r * n_actions + a] != 0.0f) legal.push_back(static_cast<std::int64_t>(a));
      out[r] = legal[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(legal.size())))];
    } else {
      out[r] = greedy[r];
    }
  }
  return out;
}

}  // namespace marlbench::algorithms
