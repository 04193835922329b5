#include "marlbench/algorithms/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace marlbench::algorithms {

Tensor mask_logits(const Tensor& logits, const std::vector<float>& mask) {
  if (mask.empty()) return logits;
  if (mask.size() != logits.size())
    throw std::invalid_argument("mask_logits: mask size does not match logits");
  Tensor m(logits.shape(), mask);
  return masked_fill(logits, m, -1e9f);
}

std::vector<std::int64_t> sample_categorical(const std::vector<float>& probs, std::size_t rows,
                                             std::size_t n_actions, RngStream& rng) {
  if (probs.size() != rows * n_actions) throw std::invalid_argument("sample_categorical: bad table size");
  std::vector<std::int64_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* p = probs.data() + r * n_actions;
    const double u = rng.uniform();
    double cum = 0.0;
    std::int64_t pick = -1;
    for (std::size_t a = 0; a < n_actions; ++a) {
      cum += p[a];
      if (u < cum) {
        pick = static_cast<std::int64_t>(a);
        break;
      }
    }
    if (pick < 0) {  // numerical tail: take the last action with support
      for (std::size_t a = n_actions; a-- > 0;)
        if (p[a] > 0.0f) {
          pick = static_cast<std::int64_t>(a);
          break;
        }
      if (pick < 0) throw std::invalid_argument("sample_categorical: row has no support");
    }
    out[r] = pick;
  }
  return out;
}

Tensor categorical_log_prob(const Tensor& masked_logits, const std::vector<std::int64_t>& actions) {
  Tensor logp = masked_logits.log_softmax_last();
  return gather(logp, logp.ndim() - 1, actions);
}

Tensor categorical_entropy(const Tensor& masked_logits) {
  Tensor logp = masked_logits.log_softmax_last();
  Tensor p = masked_logits.softmax_last();
  return -(p * logp).sum(masked_logits.ndim() - 1);
}

double squashed_gaussian_logprob(const float* mean, const float* log_std, const float* pre_tanh,
                                 const float* action, int d) {
  double lp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double ls = std::clamp(static_cast<double>(log_std[i]), kLogStdMin, kLogStdMax);
    const double std = std::exp(ls);
    const double z = (pre_tanh[i] - mean[i]) / std;
    lp += -0.5 * z * z - ls - kHalfLog2Pi;
    lp -= std::log(1.0 - double(action[i]) * double(action[i]) + kSquashEps);
  }
  return lp;
}

namespace {

Tensor clamped_log_std(const Tensor& log_std) {
  return log_std.clamp(static_cast<float>(kLogStdMin), static_cast<float>(kLogStdMax));
}

// log N(u | mean, std) + tanh correction, summed over the last axis.
Tensor logprob_terms(const Tensor& mean, const Tensor& log_std_c, const Tensor& u, const Tensor& a) {
  Tensor std = log_std_c.exp();
  Tensor z = (u - mean) / std;
  Tensor normal_term = (z * z) * (-0.5f) - log_std_c - static_cast<float>(kHalfLog2Pi);
  Tensor correction = ((1.0f - a * a) + static_cast<float>(kSquashEps)).log();
  Tensor per_dim = normal_term - correction;
  return per_dim.sum(per_dim.ndim() - 1);
}

}  // namespace

Tensor squashed_gaussian_logprob_t(const Tensor& mean, const Tensor& log_std, const Tensor& actions) {
  // recover the pre-squash value; clamp keeps atanh finite at the bounds
  Tensor a = actions.clamp(-1.0f + 1e-6f, 1.0f - 1e-6f);
  Tensor u = ((1.0f + a).log() - (1.0f - a).log()) * 0.5f;
  return logprob_terms(mean, clamped_log_std(log_std), u, a);
}

ReparamSample squashed_gaussian_rsample(const Tensor& mean, const Tensor& log_std, const Tensor& xi) {
  Tensor log_std_c = clamped_log_std(log_std);
  Tensor u = mean + log_std_c.exp() * xi;
  Tensor a = u.tanh();
  ReparamSample out;
  out.actions = a;
  out.log_prob = logprob_terms(mean, log_std_c, u, a);
  return out;
}

Tensor gaussian_entropy(const Tensor& log_std, const num::Shape& like) {
  // H = sum_d (log_std + 0.5 * log(2*pi*e)); broadcast against `like` rows
  Tensor ones = Tensor::ones(like);
  Tensor h = clamped_log_std(log_std) + static_cast<float>(kHalfLog2Pi + 0.5);
  Tensor per_dim = ones * h;
  return per_dim.sum(per_dim.ndim() - 1);
}

}  // namespace marlbench::algorithms
