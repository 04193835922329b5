#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "marlbench/envs/env.hpp"
#include "marlbench/numeric/rng.hpp"

namespace marlbench::algorithms {

// Uniform FIFO replay over per-environment transitions of one agent group.
// Draws are without replacement within a single sample() call.
class ReplayBuffer {
 public:
  struct Layout {
    std::int64_t capacity = 1;
    int n_agents = 1;
    int d_obs = 1;
    int d_act = 0;       // continuous action width (0 for discrete)
    int n_actions = 0;   // discrete cardinality (0 for continuous)
    int d_state = 0;     // 0 when the task has no global state
    bool maskable = false;
  };

  struct Sample {
    std::size_t count = 0;
    std::vector<float> obs, next_obs;        // [k, n, d_obs]
    std::vector<float> action;               // [k, n, d_act]
    std::vector<std::int64_t> action_index;  // [k, n]
    std::vector<float> reward;               // [k, n]
    std::vector<std::uint8_t> done;          // [k]
    std::vector<float> mask, next_mask;      // [k, n, A]
    std::vector<float> state, next_state;    // [k, d_state]
  };

  ReplayBuffer() = default;
  explicit ReplayBuffer(const Layout& layout);

  std::int64_t size() const { return size_; }
  std::int64_t capacity() const { return layout_.capacity; }

  // Append every environment row of the collected batch for group `g`.
  void add(const envs::StepBatch& batch, std::size_t g);

  Sample sample(std::int64_t k, num::RngStream& rng) const;

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  void copy_row(Sample& out, std::size_t dst, std::int64_t slot) const;

  Layout layout_;
  std::int64_t size_ = 0;
  std::int64_t next_ = 0;  // ring insertion slot
  std::vector<float> obs_, next_obs_, action_, reward_, mask_, next_mask_, state_, next_state_;
  std::vector<std::int64_t> action_index_;
  std::vector<std::uint8_t> done_;
};

}  // namespace marlbench::algorithms
