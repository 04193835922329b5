#include "marlbench/algorithms/gae.hpp"

#include <stdexcept>

namespace marlbench::algorithms {

GaeResult gae(const std::vector<float>& rewards, const std::vector<float>& values,
              const std::vector<float>& next_values, const std::vector<std::uint8_t>& dones, std::size_t T,
              std::size_t B, std::size_t n, double gamma, double lambda) {
  const std::size_t total = T * B * n;
  if (rewards.size() != total || values.size() != total || next_values.size() != total ||
      dones.size() != T * B)
    throw std::invalid_argument("gae: buffer sizes do not match [T, B, n]");
  GaeResult out;
  out.advantages.assign(total, 0.0f);
  out.value_targets.assign(total, 0.0f);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      double running = 0.0;
      for (std::size_t t = T; t-- > 0;) {
        const std::size_t k = (t * B + b) * n + i;
        const double not_done = dones[t * B + b] ? 0.0 : 1.0;
        const double delta = rewards[k] + gamma * not_done * next_values[k] - values[k];
        running = delta + gamma * lambda * not_done * running;
        out.advantages[k] = static_cast<float>(running);
        out.value_targets[k] = static_cast<float>(running + values[k]);
      }
    }
  }
  return out;
}

}  // namespace marlbench::algorithms
