#pragma once

#include <cstdint>
#include <vector>

#include "marlbench/numeric/rng.hpp"
#include "marlbench/numeric/tensor.hpp"

namespace marlbench::algorithms {

using num::RngStream;
using num::Tensor;

// ---- categorical over the last axis -------------------------------------------

// Push masked-out logits to a large negative value. Mask entries are 0/1 and
// must match the logits layout; empty mask is a no-op.
Tensor mask_logits(const Tensor& logits, const std::vector<float>& mask);

// Sample one index per row of a [rows, A] probability table.
std::vector<std::int64_t> sample_categorical(const std::vector<float>& probs, std::size_t rows,
                                             std::size_t n_actions, RngStream& rng);

// log pi(a) per row via log-softmax + gather.
Tensor categorical_log_prob(const Tensor& masked_logits, const std::vector<std::int64_t>& actions);

// Exact entropy per row.
Tensor categorical_entropy(const Tensor& masked_logits);

// ---- tanh-squashed diagonal Gaussian -------------------------------------------

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;
inline constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)

// Scalar-path log density of a = tanh(u) under N(mean, std) with the
// change-of-variables correction, summed over the action dimension.
double squashed_gaussian_logprob(const float* mean, const float* log_std, const float* pre_tanh,
                                 const float* action, int d);

// Graph-path log probability for stored actions: recovers u = atanh(a).
// mean and log_std participate in the graph; actions are constants.
// Shapes: mean [R, d], log_std broadcastable, actions [R, d]; result [R].
Tensor squashed_gaussian_logprob_t(const Tensor& mean, const Tensor& log_std, const Tensor& actions);

// Graph-path log probability of freshly reparameterized samples
// u = mean + exp(log_std) * xi, a = tanh(u); xi is a constant tensor.
// Returns {actions a, log_prob [R]} with gradients into mean/log_std.
struct ReparamSample {
  Tensor actions;
  Tensor log_prob;
};
ReparamSample squashed_gaussian_rsample(const Tensor& mean, const Tensor& log_std, const Tensor& xi);

// Gaussian entropy (pre-squash, analytic), summed over the action dim: [R].
Tensor gaussian_entropy(const Tensor& log_std, const num::Shape& like);

}  // namespace marlbench::algorithms
