#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace marlbench::algorithms {

struct GaeResult {
  std::vector<float> advantages;     // [T, B, n]
  std::vector<float> value_targets;  // [T, B, n]
};

// Generalized advantage estimation over a [T, B, n] rollout.
//   delta_t = r_t + gamma * (1 - d_t) * V(s_{t+1}) - V(s_t)
//   A_t     = delta_t + gamma * lambda * (1 - d_t) * A_{t+1}
//   target  = A + V
// dones are per environment [T, B] and cut the recursion.
GaeResult gae(const std::vector<float>& rewards, const std::vector<float>& values,
              const std::vector<float>& next_values, const std::vector<std::uint8_t>& dones, std::size_t T,
              std::size_t B, std::size_t n, double gamma, double lambda);

}  // namespace marlbench::algorithms
