#include "marlbench/algorithms/replay_buffer.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "marlbench/core/binio.hpp"

namespace marlbench::algorithms {

ReplayBuffer::ReplayBuffer(const Layout& layout) : layout_(layout) {
  if (layout.capacity < 1) throw std::invalid_argument("replay buffer: capacity must be >= 1");
  const std::size_t cap = static_cast<std::size_t>(layout.capacity);
  const std::size_t n = static_cast<std::size_t>(layout.n_agents);
  obs_.resize(cap * n * layout.d_obs);
  next_obs_.resize(cap * n * layout.d_obs);
  reward_.resize(cap * n);
  done_.resize(cap);
  if (layout.d_act > 0) action_.resize(cap * n * layout.d_act);
  if (layout.n_actions > 0) action_index_.resize(cap * n);
  if (layout.maskable) {
    mask_.resize(cap * n * layout.n_actions);
    next_mask_.resize(cap * n * layout.n_actions);
  }
  if (layout.d_state > 0) {
    state_.resize(cap * layout.d_state);
    next_state_.resize(cap * layout.d_state);
  }
}

void ReplayBuffer::add(const envs::StepBatch& batch, std::size_t g) {
  const auto& gs = batch.groups.at(g);
  const std::size_t B = batch.done.size();
  const std::size_t n = static_cast<std::size_t>(layout_.n_agents);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t slot = static_cast<std::size_t>(next_);
    std::copy_n(gs.obs.begin() + b * n * layout_.d_obs, n * layout_.d_obs,
                obs_.begin() + slot * n * layout_.d_obs);
    std::copy_n(gs.next_obs.begin() + b * n * layout_.d_obs, n * layout_.d_obs,
                next_obs_.begin() + slot * n * layout_.d_obs);
    std::copy_n(gs.reward.begin() + b * n, n, reward_.begin() + slot * n);
    done_[slot] = batch.done[b];
    if (layout_.d_act > 0)
      std::copy_n(gs.action.begin() + b * n * layout_.d_act, n * layout_.d_act,
                  action_.begin() + slot * n * layout_.d_act);
    if (layout_.n_actions > 0)
      std::copy_n(gs.action_index.begin() + b * n, n, action_index_.begin() + slot * n);
    if (layout_.maskable) {
      std::copy_n(gs.action_mask.begin() + b * n * layout_.n_actions, n * layout_.n_actions,
                  mask_.begin() + slot * n * layout_.n_actions);
      std::copy_n(gs.next_action_mask.begin() + b * n * layout_.n_actions, n * layout_.n_actions,
                  next_mask_.begin() + slot * n * layout_.n_actions);
    }
    if (layout_.d_state > 0) {
      std::copy_n(batch.global_state.begin() + b * layout_.d_state, layout_.d_state,
                  state_.begin() + slot * layout_.d_state);
      std::copy_n(batch.next_global_state.begin() + b * layout_.d_state, layout_.d_state,
                  next_state_.begin() + slot * layout_.d_state);
    }
    next_ = (next_ + 1) % layout_.capacity;
    size_ = std::min(size_ + 1, layout_.capacity);
  }
}

void ReplayBuffer::copy_row(Sample& out, std::size_t dst, std::int64_t slot) const {
  const std::size_t n = static_cast<std::size_t>(layout_.n_agents);
  const std::size_t s = static_cast<std::size_t>(slot);
  std::copy_n(obs_.begin() + s * n * layout_.d_obs, n * layout_.d_obs, out.obs.begin() + dst * n * layout_.d_obs);
  std::copy_n(next_obs_.begin() + s * n * layout_.d_obs, n * layout_.d_obs,
              out.next_obs.begin() + dst * n * layout_.d_obs);
  std::copy_n(reward_.begin() + s * n, n, out.reward.begin() + dst * n);
  out.done[dst] = done_[s];
  if (layout_.d_act > 0)
    std::copy_n(action_.begin() + s * n * layout_.d_act, n * layout_.d_act,
                out.action.begin() + dst * n * layout_.d_act);
  if (layout_.n_actions > 0)
    std::copy_n(action_index_.begin() + s * n, n, out.action_index.begin() + dst * n);
  if (layout_.maskable) {
    std::copy_n(mask_.begin() + s * n * layout_.n_actions, n * layout_.n_actions,
                out.mask.begin() + dst * n * layout_.n_actions);
    std::copy_n(next_mask_.begin() + s * n * layout_.n_actions, n * layout_.n_actions,
                out.next_mask.begin() + dst * n * layout_.n_actions);
  }
  if (layout_.d_state > 0) {
    std::copy_n(state_.begin() + s * layout_.d_state, layout_.d_state, out.state.begin() + dst * layout_.d_state);
    std::copy_n(next_state_.begin() + s * layout_.d_state, layout_.d_state,
                out.next_state.begin() + dst * layout_.d_state);
  }
}

ReplayBuffer::Sample ReplayBuffer::sample(std::int64_t k, num::RngStream& rng) const {
  if (k < 1 || k > size_) throw std::invalid_argument("replay buffer: cannot sample " + std::to_string(k) +
                                                      " of " + std::to_string(size_) + " transitions");
  // Floyd's algorithm: k distinct uniform indices
  std::unordered_set<std::int64_t> chosen;
  std::vector<std::int64_t> order;
  order.reserve(static_cast<std::size_t>(k));
  for (std::int64_t j = size_ - k; j < size_; ++j) {
    const std::int64_t t = rng.uniform_int(j + 1);
    if (chosen.insert(t).second)
      order.push_back(t);
    else {
      chosen.insert(j);
      order.push_back(j);
    }
  }
  Sample out;
  out.count = static_cast<std::size_t>(k);
  const std::size_t n = static_cast<std::size_t>(layout_.n_agents);
  out.obs.resize(out.count * n * layout_.d_obs);
  out.next_obs.resize(out.count * n * layout_.d_obs);
  out.reward.resize(out.count * n);
  out.done.resize(out.count);
  if (layout_.d_act > 0) out.action.resize(out.count * n * layout_.d_act);
  if (layout_.n_actions > 0) out.action_index.resize(out.count * n);
  if (layout_.maskable) {
    out.mask.resize(out.count * n * layout_.n_actions);
    out.next_mask.resize(out.count * n * layout_.n_actions);
  }
  if (layout_.d_state > 0) {
    out.state.resize(out.count * layout_.d_state);
    out.next_state.resize(out.count * layout_.d_state);
  }
  for (std::size_t i = 0; i < out.count; ++i) copy_row(out, i, order[i]);
  return out;
}

void ReplayBuffer::save(std::ostream& os) const {
  binio::write_pod(os, size_);
  binio::write_pod(os, next_);
  binio::write_vec(os, obs_);
  binio::write_vec(os, next_obs_);
  binio::write_vec(os, action_);
  binio::write_vec(os, action_index_);
  binio::write_vec(os, reward_);
  binio::write_vec(os, done_);
  binio::write_vec(os, mask_);
  binio::write_vec(os, next_mask_);
  binio::write_vec(os, state_);
  binio::write_vec(os, next_state_);
}

void ReplayBuffer::load(std::istream& is) {
  size_ = binio::read_pod<std::int64_t>(is);
  next_ = binio::read_pod<std::int64_t>(is);
  obs_ = binio::read_vec<float>(is);
  next_obs_ = binio::read_vec<float>(is);
  action_ = binio::read_vec<float>(is);
  action_index_ = binio::read_vec<std::int64_t>(is);
  reward_ = binio::read_vec<float>(is);
  done_ = binio::read_vec<std::uint8_t>(is);
  mask_ = binio::read_vec<float>(is);
  next_mask_ = binio::read_vec<float>(is);
  state_ = binio::read_vec<float>(is);
  next_state_ = binio::read_vec<float>(is);
}

}  // namespace marlbench::algorithms
