#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "marlbench/numeric/tensor.hpp"

namespace marlbench::num {

struct Param {
  std::string name;
  Tensor tensor;
};

// Bias-corrected Adam over a fixed parameter list. Moment buffers are laid
// out in the same order as the parameters given at construction.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Param> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
      m_.emplace_back(p.tensor.size(), 0.0f);
      v_.emplace_back(p.tensor.size(), 0.0f);
    }
  }

  // One update from the grads currently stored on the parameters. Parameters
  // without an allocated grad are treated as zero-gradient.
  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      auto& p = params_[pi];
      if (!p.tensor.has_grad()) continue;
      const auto& g = p.tensor.grad();
      auto& data = p.tensor.mutable_data();
      auto& m = m_[pi];
      auto& v = v_[pi];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i]))
          throw std::invalid_argument("adam: non-finite gradient for parameter '" + p.name + "'");
        m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * g[i]);
        v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * double(g[i]) * double(g[i]));
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        data[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  const std::vector<Param>& params() const { return params_; }
  std::int64_t step_count() const { return t_; }
  double lr() const { return lr_; }

  // Checkpoint access.
  std::vector<std::vector<float>>& moments_m() { return m_; }
  std::vector<std::vector<float>>& moments_v() { return v_; }
  void set_step_count(std::int64_t t) { t_ = t; }

 private:
  std::vector<Param> params_;
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

// Scale all grads so the global L2 norm does not exceed max_norm.
// Returns the applied scale (1.0 when no clipping happened).
inline double clip_grad_norm(const std::vector<Param>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (float g : p.tensor.grad()) sq += double(g) * double(g);
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return 1.0;
  const double scale = max_norm / norm;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (float& g : p.tensor.mutable_grad()) g = static_cast<float>(g * scale);
  }
  return scale;
}

}  // namespace marlbench::num
