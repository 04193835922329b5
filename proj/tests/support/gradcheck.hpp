#pragma once

// Finite-difference gradient oracle, independent of the backward pass it
// checks. Works in double precision against central differences.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "marlbench/numeric/rng.hpp"
#include "marlbench/numeric/tensor.hpp"

namespace gradcheck {

using marlbench::num::DTensor;
using marlbench::num::RngStream;
using marlbench::num::Shape;

// f maps the current leaf values to a scalar loss. Leaves are reused across
// calls; the oracle perturbs their data in place.
struct CheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline CheckResult check_gradients(const std::function<DTensor()>& f, std::vector<DTensor>& leaves,
                                   double h = 1e-5) {
  for (auto& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  DTensor loss = f();
  loss.backward();
  CheckResult res;
  for (auto& leaf : leaves) {
    std::vector<double> analytic(leaf.size(), 0.0);
    if (leaf.has_grad()) analytic = leaf.grad();
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const double orig = leaf.data()[i];
      leaf.mutable_data()[i] = orig + h;
      const double up = f().item();
      leaf.mutable_data()[i] = orig - h;
      const double dn = f().item();
      leaf.mutable_data()[i] = orig;
      const double fd = (up - dn) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-3});
      res.max_rel_err = std::max(res.max_rel_err, std::abs(analytic[i] - fd) / denom);
      ++res.checked;
    }
  }
  return res;
}

// A random small computation graph: a few leaf matrices combined through a
// random op sequence and reduced to a scalar. Kinked ops (relu, abs, clamp)
// are only applied when all inputs keep a safe margin from the kink, so the
// finite-difference oracle stays valid.
struct RandomGraph {
  std::vector<DTensor> leaves;
  std::function<DTensor()> forward;
};

inline bool has_margin(const DTensor& t, double at, double margin) {
  for (double v : t.data())
    if (std::abs(v - at) < margin) return false;
  return true;
}

inline RandomGraph make_random_graph(std::uint64_t seed) {
  RngStream rng(marlbench::num::splitmix64(seed));
  const std::size_t rows = 1 + rng.uniform_int(4);
  const std::size_t cols = 1 + rng.uniform_int(8);
  const std::size_t n_leaves = 1 + rng.uniform_int(3);

  auto rand_leaf = [&](Shape shape) {
    std::vector<double> vals(marlbench::num::shape_size(shape));
    for (auto& v : vals) {
      v = rng.uniform(0.2, 1.2);
      if (rng.uniform() < 0.5) v = -v;
    }
    return DTensor(shape, vals);
  };

  RandomGraph g;
  for (std::size_t i = 0; i < n_leaves; ++i) g.leaves.push_back(rand_leaf({rows, cols}));
  // extra matmul operand
  const std::size_t inner = 1 + rng.uniform_int(4);
  g.leaves.push_back(rand_leaf({cols, inner}));

  const int depth = 1 + static_cast<int>(rng.uniform_int(4));
  std::vector<int> ops;
  for (int d = 0; d < depth; ++d) ops.push_back(static_cast<int>(rng.uniform_int(9)));
  const std::size_t n = g.leaves.size();

  // Leaf handles share storage, so the in-place perturbations made by the
  // oracle are visible through these captured copies.
  g.forward = [ops, n, leaves = g.leaves]() {
    using namespace marlbench::num;
    DTensor v = leaves[0];
    for (std::size_t i = 1; i + 1 < n; ++i) v = v + leaves[i];
    for (int op : ops) {
      switch (op) {
        case 0: v = v.tanh(); break;
        case 1: v = (v * 0.4).exp(); break;
        case 2: v = ((v * v) + 0.5).log(); break;
        case 3: v = has_margin(v, 0.0, 1e-3) ? v.relu() : v.tanh(); break;
        case 4: v = has_margin(v, 0.0, 1e-3) ? v.abs() : v.tanh(); break;
        case 5:
          v = (has_margin(v, -0.8, 1e-3) && has_margin(v, 0.8, 1e-3)) ? v.clamp(-0.8, 0.8) : v.tanh();
          break;
        case 6: v = v.softmax_last(); break;
        case 7: v = v * v; break;
        case 8: v = v / ((v * v) + 1.0); break;
      }
    }
    DTensor prod = matmul(v, leaves[n - 1]);
    return (prod.mean_all() + v.sum_all() * 0.25);
  };
  return g;
}

}  // namespace gradcheck
