#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

namespace marlbench::num {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

[[noreturn]] inline void op_shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

// Broadcasting rule: trailing-dimension alignment, extent-1 expands.
inline Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) op_shape_error(op, a, b);
    out[i] = std::max(da, db);
  }
  return out;
}

// Row-major strides of `in` aligned to the (broadcast) shape `out`; broadcast
// axes get stride 0.
inline std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t axis = in.size() - 1 - i;
    const std::size_t out_axis = out.size() - 1 - i;
    if (in[axis] != 1) strides[out_axis] = stride;
    stride *= in[axis];
  }
  return strides;
}

// Whether gradient recording is active. Backward passes run with it off so
// that gradient computation never extends the graph.
struct GradMode {
  static bool& enabled() {
    thread_local bool on = true;
    return on;
  }
};

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(GradMode::enabled()) { GradMode::enabled() = false; }
  ~NoGradGuard() { GradMode::enabled() = prev; }
};

template <typename T>
class TensorT;

template <typename T>
struct GraphNodeT {
  std::vector<TensorT<T>> parents;
  // Receives the node's own output tensor (whose grad is fully accumulated)
  // and pushes gradient into the parents.
  std::function<void(const TensorT<T>&)> backward;
};

// Dense row-major n-dimensional array with reverse-mode autodiff. Value
// semantics on a shared implementation: copies alias the same storage. Data
// is immutable after construction except through mutable_data(), which is
// reserved for parameter updates between forward passes.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  TensorT(Shape shape, std::vector<T> data) {
    if (shape_size(shape) != data.size())
      throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match data length " +
                                  std::to_string(data.size()));
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
  }

  static TensorT zeros(Shape shape) {
    const std::size_t n = shape_size(shape);
    return TensorT(std::move(shape), std::vector<T>(n, T(0)));
  }
  static TensorT ones(Shape shape) {
    const std::size_t n = shape_size(shape);
    return TensorT(std::move(shape), std::vector<T>(n, T(1)));
  }
  static TensorT full(Shape shape, T value) {
    const std::size_t n = shape_size(shape);
    return TensorT(std::move(shape), std::vector<T>(n, value));
  }
  static TensorT scalar(T value) { return TensorT(Shape{}, std::vector<T>{value}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  std::size_t extent(std::size_t axis) const { return impl_->shape[axis]; }

  const std::vector<T>& data() const { return impl_->data; }
  // In-place access for optimizers; must not be used on graph intermediates.
  std::vector<T>& mutable_data() { return impl_->data; }

  T item() const {
    if (size() != 1) throw std::invalid_argument("item: tensor is not scalar, shape " + shape_str(shape()));
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  const std::vector<T>& grad() const { return impl_->grad; }
  // Constness is shallow on this handle type: gradient accumulation happens
  // through const handles captured in backward closures.
  std::vector<T>& mutable_grad() const {
    ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }

  // A leaf copy of the same values, detached from the graph.
  TensorT detach() const { return TensorT(impl_->shape, impl_->data); }

  bool same_impl(const TensorT& other) const { return impl_ == other.impl_; }

  // ---- reverse-mode differentiation -------------------------------------

  void backward() {
    if (size() != 1)
      throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(shape()));
    // Topological order (children before parents after reversal).
    std::vector<TensorT> order;
    std::unordered_set<const Impl*> seen;
    std::vector<std::pair<TensorT, std::size_t>> stack;
    stack.emplace_back(*this, 0);
    seen.insert(impl_.get());
    while (!stack.empty()) {
      auto& [t, next] = stack.back();
      auto* node = t.impl_->node.get();
      const std::size_t n_parents = node ? node->parents.size() : 0;
      if (next < n_parents) {
        TensorT parent = node->parents[next];
        ++next;
        if (parent.impl_ && !seen.count(parent.impl_.get())) {
          seen.insert(parent.impl_.get());
          stack.emplace_back(parent, 0);
        }
      } else {
        order.push_back(t);
        stack.pop_back();
      }
    }
    ensure_grad();
    impl_->grad[0] = T(1);
    NoGradGuard no_grad;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto* node = it->impl_->node.get();
      if (node && node->backward && it->has_grad()) node->backward(*it);
    }
    // The graph is per-forward-pass; free it now.
    for (auto& t : order) t.impl_->node.reset();
  }

  // Accumulate a gradient contribution shaped like `contrib_shape`
  // (the op output), reducing over broadcast axes to this tensor's shape.
  void accumulate_grad_reduced(const std::vector<T>& contrib, const Shape& contrib_shape) const {
    ensure_grad();
    auto& g = impl_->grad;
    if (contrib_shape == impl_->shape) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += contrib[i];
      return;
    }
    const auto strides = broadcast_strides(impl_->shape, contrib_shape);
    Shape idx(contrib_shape.size(), 0);
    std::size_t off = 0;
    for (std::size_t lin = 0;; ++lin) {
      g[off] += contrib[lin];
      std::size_t d = contrib_shape.size();
      while (d > 0) {
        --d;
        ++idx[d];
        off += strides[d];
        if (idx[d] < contrib_shape[d]) break;
        idx[d] = 0;
        off -= strides[d] * contrib_shape[d];
      }
      if (lin + 1 == contrib.size()) break;
    }
  }

  // ---- shape ops ---------------------------------------------------------

  TensorT reshape(Shape new_shape) const {
    if (shape_size(new_shape) != size())
      throw std::invalid_argument("reshape: cannot view " + shape_str(shape()) + " as " + shape_str(new_shape));
    TensorT out(new_shape, impl_->data);
    attach(out, {*this}, [](const TensorT& o) {
      o.parent(0).accumulate_grad_reduced(o.grad(), o.parent(0).shape());
    });
    return out;
  }

  TensorT permute(const std::vector<std::size_t>& axes) const {
    if (axes.size() != ndim()) throw std::invalid_argument("permute: axes rank mismatch for " + shape_str(shape()));
    Shape out_shape(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = impl_->shape[axes[i]];
    std::vector<T> out(size());
    permute_into(impl_->data, impl_->shape, axes, out);
    TensorT result(out_shape, std::move(out));
    std::vector<std::size_t> inverse(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) inverse[axes[i]] = i;
    attach(result, {*this}, [inverse](const TensorT& o) {
      std::vector<T> gin(o.size());
      permute_into(o.grad(), o.shape(), inverse, gin);
      Shape in_shape(inverse.size());
      for (std::size_t i = 0; i < inverse.size(); ++i) in_shape[i] = o.shape()[inverse[i]];
      o.parent(0).accumulate_grad_reduced(gin, in_shape);
    });
    return result;
  }

  // Swap the last two axes.
  TensorT transpose_last() const {
    if (ndim() < 2) throw std::invalid_argument("transpose: need rank >= 2, got " + shape_str(shape()));
    std::vector<std::size_t> axes(ndim());
    for (std::size_t i = 0; i < ndim(); ++i) axes[i] = i;
    std::swap(axes[ndim() - 2], axes[ndim() - 1]);
    return permute(axes);
  }

  TensorT slice(std::size_t axis, std::size_t start, std::size_t len) const {
    if (axis >= ndim() || start + len > impl_->shape[axis])
      throw std::invalid_argument("slice: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
                                  ") out of bounds for axis " + std::to_string(axis) + " of " + shape_str(shape()));
    const auto [outer, extent, inner] = axis_split(impl_->shape, axis);
    Shape out_shape = impl_->shape;
    out_shape[axis] = len;
    std::vector<T> out(outer * len * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t a = 0; a < len; ++a)
        for (std::size_t i = 0; i < inner; ++i)
          out[(o * len + a) * inner + i] = impl_->data[(o * extent + start + a) * inner + i];
    TensorT result(out_shape, std::move(out));
    attach(result, {*this}, [axis, start, len, outer, extent, inner](const TensorT& o) {
      std::vector<T> gin(o.parent(0).size(), T(0));
      const auto& g = o.grad();
      for (std::size_t ou = 0; ou < outer; ++ou)
        for (std::size_t a = 0; a < len; ++a)
          for (std::size_t i = 0; i < inner; ++i)
            gin[(ou * extent + start + a) * inner + i] += g[(ou * len + a) * inner + i];
      o.parent(0).accumulate_grad_reduced(gin, o.parent(0).shape());
    });
    return result;
  }

  // ---- reductions ----------------------------------------------------------

  TensorT sum(std::size_t axis, bool keepdim = false) const { return reduce(axis, keepdim, ReduceKind::Sum); }
  TensorT mean(std::size_t axis, bool keepdim = false) const { return reduce(axis, keepdim, ReduceKind::Mean); }
  TensorT max(std::size_t axis, bool keepdim = false) const { return reduce(axis, keepdim, ReduceKind::Max); }

  TensorT sum_all() const {
    T acc = T(0);
    for (T v : impl_->data) acc += v;
    TensorT out = TensorT::scalar(acc);
    attach(out, {*this}, [](const TensorT& o) {
      const T g = o.grad()[0];
      std::vector<T> gin(o.parent(0).size(), g);
      o.parent(0).accumulate_grad_reduced(gin, o.parent(0).shape());
    });
    return out;
  }

  TensorT mean_all() const {
    T acc = T(0);
    for (T v : impl_->data) acc += v;
    const T inv = T(1) / static_cast<T>(size());
    TensorT out = TensorT::scalar(acc * inv);
    attach(out, {*this}, [inv](const TensorT& o) {
      const T g = o.grad()[0] * inv;
      std::vector<T> gin(o.parent(0).size(), g);
      o.parent(0).accumulate_grad_reduced(gin, o.parent(0).shape());
    });
    return out;
  }

  // ---- elementwise unary ---------------------------------------------------

  TensorT tanh() const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(impl_->data[i]);
    TensorT result(impl_->shape, std::move(out));
    attach(result, {*this}, [](const TensorT& o) {
      const auto& g = o.grad();
      const auto& y = o.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = g[i] * (T(1) - y[i] * y[i]);
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  TensorT relu() const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = impl_->data[i] > T(0) ? impl_->data[i] : T(0);
    TensorT result(impl_->shape, std::move(out));
    TensorT self = *this;
    attach(result, {*this}, [self](const TensorT& o) {
      const auto& g = o.grad();
      const auto& x = self.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = x[i] > T(0) ? g[i] : T(0);
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  TensorT elu() const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const T x = impl_->data[i];
      out[i] = x > T(0) ? x : std::expm1(x);
    }
    TensorT result(impl_->shape, std::move(out));
    TensorT self = *this;
    attach(result, {*this}, [self](const TensorT& o) {
      const auto& g = o.grad();
      const auto& x = self.data();
      const auto& y = o.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = x[i] > T(0) ? g[i] : g[i] * (y[i] + T(1));
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  TensorT exp() const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(impl_->data[i]);
    TensorT result(impl_->shape, std::move(out));
    attach(result, {*this}, [](const TensorT& o) {
      const auto& g = o.grad();
      const auto& y = o.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = g[i] * y[i];
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  TensorT log() const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(impl_->data[i]);
    TensorT result(impl_->shape, std::move(out));
    TensorT self = *this;
    attach(result, {*this}, [self](const TensorT& o) {
      const auto& g = o.grad();
      const auto& x = self.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = g[i] / x[i];
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  TensorT abs() const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(impl_->data[i]);
    TensorT result(impl_->shape, std::move(out));
    TensorT self = *this;
    attach(result, {*this}, [self](const TensorT& o) {
      const auto& g = o.grad();
      const auto& x = self.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = x[i] >= T(0) ? g[i] : -g[i];
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  TensorT sqrt() const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(impl_->data[i]);
    TensorT result(impl_->shape, std::move(out));
    attach(result, {*this}, [](const TensorT& o) {
      const auto& g = o.grad();
      const auto& y = o.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = g[i] / (T(2) * y[i]);
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  // Gradient flows only where lo <= x <= hi.
  TensorT clamp(T lo, T hi) const {
    std::vector<T> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(impl_->data[i], lo), hi);
    TensorT result(impl_->shape, std::move(out));
    TensorT self = *this;
    attach(result, {*this}, [self, lo, hi](const TensorT& o) {
      const auto& g = o.grad();
      const auto& x = self.data();
      std::vector<T> gin(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gin[i] = (x[i] >= lo && x[i] <= hi) ? g[i] : T(0);
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  // ---- softmax family (last axis) -------------------------------------------

  TensorT softmax_last() const {
    const std::size_t cols = last_extent("softmax");
    const std::size_t rows = size() / cols;
    std::vector<T> out(size());
    for (std::size_t r = 0; r < rows; ++r) {
      const T* x = impl_->data.data() + r * cols;
      T* y = out.data() + r * cols;
      T m = x[0];
      for (std::size_t c = 1; c < cols; ++c) m = std::max(m, x[c]);
      T z = T(0);
      for (std::size_t c = 0; c < cols; ++c) {
        y[c] = std::exp(x[c] - m);
        z += y[c];
      }
      for (std::size_t c = 0; c < cols; ++c) y[c] /= z;
    }
    TensorT result(impl_->shape, std::move(out));
    attach(result, {*this}, [cols, rows](const TensorT& o) {
      const auto& g = o.grad();
      const auto& y = o.data();
      std::vector<T> gin(g.size());
      for (std::size_t r = 0; r < rows; ++r) {
        T dot = T(0);
        for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c)
          gin[r * cols + c] = y[r * cols + c] * (g[r * cols + c] - dot);
      }
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  TensorT log_softmax_last() const {
    const std::size_t cols = last_extent("log_softmax");
    const std::size_t rows = size() / cols;
    std::vector<T> out(size());
    for (std::size_t r = 0; r < rows; ++r) {
      const T* x = impl_->data.data() + r * cols;
      T* y = out.data() + r * cols;
      T m = x[0];
      for (std::size_t c = 1; c < cols; ++c) m = std::max(m, x[c]);
      T z = T(0);
      for (std::size_t c = 0; c < cols; ++c) z += std::exp(x[c] - m);
      const T logz = m + std::log(z);
      for (std::size_t c = 0; c < cols; ++c) y[c] = x[c] - logz;
    }
    TensorT result(impl_->shape, std::move(out));
    attach(result, {*this}, [cols, rows](const TensorT& o) {
      const auto& g = o.grad();
      const auto& y = o.data();
      std::vector<T> gin(g.size());
      for (std::size_t r = 0; r < rows; ++r) {
        T gsum = T(0);
        for (std::size_t c = 0; c < cols; ++c) gsum += g[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c)
          gin[r * cols + c] = g[r * cols + c] - std::exp(y[r * cols + c]) * gsum;
      }
      o.parent(0).accumulate_grad_reduced(gin, o.shape());
    });
    return result;
  }

  // ---- internal plumbing shared with the free-function ops -----------------

  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    std::unique_ptr<GraphNodeT<T>> node;
  };

  const TensorT& parent(std::size_t i) const { return impl_->node->parents[i]; }

  static void attach(TensorT& out, std::vector<TensorT> parents,
                     std::function<void(const TensorT&)> backward) {
    if (!GradMode::enabled()) return;
    bool track = false;
    for (const auto& p : parents)
      if (p.requires_grad()) track = true;
    if (!track) return;
    out.impl_->requires_grad = true;
    out.impl_->node = std::make_unique<GraphNodeT<T>>();
    out.impl_->node->parents = std::move(parents);
    out.impl_->node->backward = std::move(backward);
  }

  static std::tuple<std::size_t, std::size_t, std::size_t> axis_split(const Shape& s, std::size_t axis) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    return {outer, s[axis], inner};
  }

 private:
  enum class ReduceKind { Sum, Mean, Max };

  std::size_t last_extent(const char* op) const {
    if (ndim() == 0) throw std::invalid_argument(std::string(op) + ": needs rank >= 1");
    return impl_->shape.back();
  }

  TensorT reduce(std::size_t axis, bool keepdim, ReduceKind kind) const {
    if (axis >= ndim())
      throw std::invalid_argument("reduce: axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
    const auto [outer, extent, inner] = axis_split(impl_->shape, axis);
    Shape out_shape;
    for (std::size_t i = 0; i < ndim(); ++i) {
      if (i == axis) {
        if (keepdim) out_shape.push_back(1);
      } else {
        out_shape.push_back(impl_->shape[i]);
      }
    }
    std::vector<T> out(outer * inner);
    std::vector<std::size_t> argmax;
    if (kind == ReduceKind::Max) argmax.resize(outer * inner);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        if (kind == ReduceKind::Max) {
          T best = impl_->data[(o * extent) * inner + i];
          std::size_t best_a = 0;
          for (std::size_t a = 1; a < extent; ++a) {
            const T v = impl_->data[(o * extent + a) * inner + i];
            if (v > best) {  // ties keep the lowest index
              best = v;
              best_a = a;
            }
          }
          out[o * inner + i] = best;
          argmax[o * inner + i] = best_a;
        } else {
          T acc = T(0);
          for (std::size_t a = 0; a < extent; ++a) acc += impl_->data[(o * extent + a) * inner + i];
          out[o * inner + i] = kind == ReduceKind::Mean ? acc / static_cast<T>(extent) : acc;
        }
      }
    }
    TensorT result(out_shape, std::move(out));
    const std::size_t o_c = outer, e_c = extent, i_c = inner;
    Shape in_shape = impl_->shape;
    if (kind == ReduceKind::Max) {
      attach(result, {*this}, [o_c, e_c, i_c, in_shape, argmax](const TensorT& o) {
        const auto& g = o.grad();
        std::vector<T> gin(o_c * e_c * i_c, T(0));
        for (std::size_t ou = 0; ou < o_c; ++ou)
          for (std::size_t i = 0; i < i_c; ++i)
            gin[(ou * e_c + argmax[ou * i_c + i]) * i_c + i] = g[ou * i_c + i];
        o.parent(0).accumulate_grad_reduced(gin, in_shape);
      });
    } else {
      const T scale = kind == ReduceKind::Mean ? T(1) / static_cast<T>(extent) : T(1);
      attach(result, {*this}, [o_c, e_c, i_c, in_shape, scale](const TensorT& o) {
        const auto& g = o.grad();
        std::vector<T> gin(o_c * e_c * i_c);
        for (std::size_t ou = 0; ou < o_c; ++ou)
          for (std::size_t a = 0; a < e_c; ++a)
            for (std::size_t i = 0; i < i_c; ++i) gin[(ou * e_c + a) * i_c + i] = g[ou * i_c + i] * scale;
        o.parent(0).accumulate_grad_reduced(gin, in_shape);
      });
    }
    return result;
  }

  static void permute_into(const std::vector<T>& in, const Shape& in_shape,
                           const std::vector<std::size_t>& axes, std::vector<T>& out) {
    const std::size_t rank = in_shape.size();
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = in_shape[axes[i]];
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
    std::vector<std::size_t> gather_strides(rank);
    for (std::size_t i = 0; i < rank; ++i) gather_strides[i] = in_strides[axes[i]];
    Shape idx(rank, 0);
    std::size_t src = 0;
    for (std::size_t lin = 0; lin < out.size(); ++lin) {
      out[lin] = in[src];
      std::size_t d = rank;
      while (d > 0) {
        --d;
        ++idx[d];
        src += gather_strides[d];
        if (idx[d] < out_shape[d]) break;
        idx[d] = 0;
        src -= gather_strides[d] * out_shape[d];
      }
    }
  }

  void ensure_grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  }

  std::shared_ptr<Impl> impl_;
};

// ---- elementwise binary ops with broadcasting -------------------------------

namespace detail {

template <typename T, typename F>
std::vector<T> ew_map2(const TensorT<T>& a, const TensorT<T>& b, const Shape& os, F f) {
  std::vector<T> out(shape_size(os));
  const auto& da = a.data();
  const auto& db = b.data();
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(da[i], db[i]);
    return out;
  }
  const auto sa = broadcast_strides(a.shape(), os);
  const auto sb = broadcast_strides(b.shape(), os);
  Shape idx(os.size(), 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t lin = 0; lin < out.size(); ++lin) {
    out[lin] = f(da[oa], db[ob]);
    std::size_t d = os.size();
    while (d > 0) {
      --d;
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < os[d]) break;
      idx[d] = 0;
      oa -= sa[d] * os[d];
      ob -= sb[d] * os[d];
    }
  }
  return out;
}

// Evaluate f(grad_out, a_elt, b_elt) per output element into an output-shaped
// buffer; caller reduces it onto the operand.
template <typename T, typename F>
std::vector<T> ew_grad2(const std::vector<T>& g, const TensorT<T>& a, const TensorT<T>& b,
                        const Shape& os, F f) {
  std::vector<T> out(g.size());
  const auto& da = a.data();
  const auto& db = b.data();
  if (a.shape() == b.shape() && a.shape() == os) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(g[i], da[i], db[i]);
    return out;
  }
  const auto sa = broadcast_strides(a.shape(), os);
  const auto sb = broadcast_strides(b.shape(), os);
  Shape idx(os.size(), 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t lin = 0; lin < out.size(); ++lin) {
    out[lin] = f(g[lin], da[oa], db[ob]);
    std::size_t d = os.size();
    while (d > 0) {
      --d;
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < os[d]) break;
      idx[d] = 0;
      oa -= sa[d] * os[d];
      ob -= sb[d] * os[d];
    }
  }
  return out;
}

}  // namespace detail

template <typename T>
TensorT<T> operator+(const TensorT<T>& a, const TensorT<T>& b) {
  Shape os = broadcast_shape(a.shape(), b.shape(), "add");
  TensorT<T> out(os, detail::ew_map2(a, b, os, [](T x, T y) { return x + y; }));
  TensorT<T>::attach(out, {a, b}, [](const TensorT<T>& o) {
    if (o.parent(0).requires_grad()) o.parent(0).accumulate_grad_reduced(o.grad(), o.shape());
    if (o.parent(1).requires_grad()) o.parent(1).accumulate_grad_reduced(o.grad(), o.shape());
  });
  return out;
}

template <typename T>
TensorT<T> operator-(const TensorT<T>& a, const TensorT<T>& b) {
  Shape os = broadcast_shape(a.shape(), b.shape(), "sub");
  TensorT<T> out(os, detail::ew_map2(a, b, os, [](T x, T y) { return x - y; }));
  TensorT<T>::attach(out, {a, b}, [](const TensorT<T>& o) {
    if (o.parent(0).requires_grad()) o.parent(0).accumulate_grad_reduced(o.grad(), o.shape());
    if (o.parent(1).requires_grad()) {
      std::vector<T> neg(o.grad().size());
      for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -o.grad()[i];
      o.parent(1).accumulate_grad_reduced(neg, o.shape());
    }
  });
  return out;
}

template <typename T>
TensorT<T> operator*(const TensorT<T>& a, const TensorT<T>& b) {
  Shape os = broadcast_shape(a.shape(), b.shape(), "mul");
  TensorT<T> out(os, detail::ew_map2(a, b, os, [](T x, T y) { return x * y; }));
  TensorT<T> ac = a, bc = b;
  TensorT<T>::attach(out, {a, b}, [ac, bc](const TensorT<T>& o) {
    const Shape& os2 = o.shape();
    if (o.parent(0).requires_grad())
      o.parent(0).accumulate_grad_reduced(
          detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T, T y) { return g * y; }), os2);
    if (o.parent(1).requires_grad())
      o.parent(1).accumulate_grad_reduced(
          detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T x, T) { return g * x; }), os2);
  });
  return out;
}

template <typename T>
TensorT<T> operator/(const TensorT<T>& a, const TensorT<T>& b) {
  Shape os = broadcast_shape(a.shape(), b.shape(), "div");
  TensorT<T> out(os, detail::ew_map2(a, b, os, [](T x, T y) { return x / y; }));
  TensorT<T> ac = a, bc = b;
  TensorT<T>::attach(out, {a, b}, [ac, bc](const TensorT<T>& o) {
    const Shape& os2 = o.shape();
    if (o.parent(0).requires_grad())
      o.parent(0).accumulate_grad_reduced(
          detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T, T y) { return g / y; }), os2);
    if (o.parent(1).requires_grad())
      o.parent(1).accumulate_grad_reduced(
          detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T x, T y) { return -g * x / (y * y); }), os2);
  });
  return out;
}

template <typename T>
TensorT<T> operator-(const TensorT<T>& a) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -a.data()[i];
  TensorT<T> result(a.shape(), std::move(out));
  TensorT<T>::attach(result, {a}, [](const TensorT<T>& o) {
    std::vector<T> gin(o.grad().size());
    for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = -o.grad()[i];
    o.parent(0).accumulate_grad_reduced(gin, o.shape());
  });
  return result;
}

template <typename T, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
TensorT<T> operator+(const TensorT<T>& a, S s) {
  return a + TensorT<T>::scalar(static_cast<T>(s));
}
template <typename T, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
TensorT<T> operator+(S s, const TensorT<T>& a) {
  return TensorT<T>::scalar(static_cast<T>(s)) + a;
}
template <typename T, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
TensorT<T> operator-(const TensorT<T>& a, S s) {
  return a - TensorT<T>::scalar(static_cast<T>(s));
}
template <typename T, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
TensorT<T> operator-(S s, const TensorT<T>& a) {
  return TensorT<T>::scalar(static_cast<T>(s)) - a;
}
template <typename T, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
TensorT<T> operator*(const TensorT<T>& a, S s) {
  return a * TensorT<T>::scalar(static_cast<T>(s));
}
template <typename T, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
TensorT<T> operator*(S s, const TensorT<T>& a) {
  return TensorT<T>::scalar(static_cast<T>(s)) * a;
}
template <typename T, typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
TensorT<T> operator/(const TensorT<T>& a, S s) {
  return a / TensorT<T>::scalar(static_cast<T>(s));
}

template <typename T>
TensorT<T> minimum(const TensorT<T>& a, const TensorT<T>& b) {
  Shape os = broadcast_shape(a.shape(), b.shape(), "minimum");
  TensorT<T> out(os, detail::ew_map2(a, b, os, [](T x, T y) { return x <= y ? x : y; }));
  TensorT<T> ac = a, bc = b;
  TensorT<T>::attach(out, {a, b}, [ac, bc](const TensorT<T>& o) {
    const Shape& os2 = o.shape();
    // ties route to the first operand
    o.parent(0).accumulate_grad_reduced(
        detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T x, T y) { return x <= y ? g : T(0); }), os2);
    o.parent(1).accumulate_grad_reduced(
        detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T x, T y) { return x <= y ? T(0) : g; }), os2);
  });
  return out;
}

template <typename T>
TensorT<T> maximum(const TensorT<T>& a, const TensorT<T>& b) {
  Shape os = broadcast_shape(a.shape(), b.shape(), "maximum");
  TensorT<T> out(os, detail::ew_map2(a, b, os, [](T x, T y) { return x >= y ? x : y; }));
  TensorT<T> ac = a, bc = b;
  TensorT<T>::attach(out, {a, b}, [ac, bc](const TensorT<T>& o) {
    const Shape& os2 = o.shape();
    o.parent(0).accumulate_grad_reduced(
        detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T x, T y) { return x >= y ? g : T(0); }), os2);
    o.parent(1).accumulate_grad_reduced(
        detail::ew_grad2(o.grad(), ac, bc, os2, [](T g, T x, T y) { return x >= y ? T(0) : g; }), os2);
  });
  return out;
}

// out = x where mask != 0, `value` elsewhere; gradient flows only through
// kept elements. The mask broadcasts against x and carries no gradient.
template <typename T>
TensorT<T> masked_fill(const TensorT<T>& x, const TensorT<T>& mask, T value) {
  Shape os = broadcast_shape(x.shape(), mask.shape(), "masked_fill");
  TensorT<T> out(os, detail::ew_map2(x, mask, os, [value](T xv, T mv) { return mv != T(0) ? xv : value; }));
  TensorT<T> xc = x, mc = mask;
  TensorT<T>::attach(out, {x}, [xc, mc](const TensorT<T>& o) {
    const Shape& os2 = o.shape();
    o.parent(0).accumulate_grad_reduced(
        detail::ew_grad2(o.grad(), xc, mc, os2, [](T g, T, T mv) { return mv != T(0) ? g : T(0); }), os2);
  });
  return out;
}

// ---- matmul -----------------------------------------------------------------

namespace detail {

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* brow = b + p * n;
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

// c[m,k] += a[m,n] * b[k,n]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      T acc = T(0);
      const T* arow = a + i * n;
      const T* brow = b + j * n;
      for (std::size_t p = 0; p < n; ++p) acc += arow[p] * brow[p];
      c[i * k + j] += acc;
    }
}

// c[k,n] += a[m,k]^T * g[m,n]
template <typename T>
void gemm_tn(const T* a, const T* g, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* grow = g + i * n;
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
}

inline Shape batch_dims(const Shape& s) { return Shape(s.begin(), s.end() - 2); }

}  // namespace detail

// Batched matrix product on the last two axes; leading axes broadcast under
// the trailing-alignment rule.
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.ndim() < 2 || b.ndim() < 2) op_shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.shape()[a.ndim() - 2];
  const std::size_t k = a.shape()[a.ndim() - 1];
  const std::size_t k2 = b.shape()[b.ndim() - 2];
  const std::size_t n = b.shape()[b.ndim() - 1];
  if (k != k2) op_shape_error("matmul", a.shape(), b.shape());
  const Shape ab = detail::batch_dims(a.shape());
  const Shape bb = detail::batch_dims(b.shape());
  const Shape ob = broadcast_shape(ab, bb, "matmul");
  Shape os = ob;
  os.push_back(m);
  os.push_back(n);
  const std::size_t batches = shape_size(ob);
  const auto sa = broadcast_strides(ab, ob);
  const auto sb = broadcast_strides(bb, ob);

  auto batch_offsets = [ob, sa, sb](std::size_t batch_lin, std::size_t& oa, std::size_t& ob_off) {
    oa = 0;
    ob_off = 0;
    std::size_t rem = batch_lin;
    for (std::size_t d = ob.size(); d-- > 0;) {
      const std::size_t coord = rem % ob[d];
      rem /= ob[d];
      oa += coord * sa[d];
      ob_off += coord * sb[d];
    }
  };

  std::vector<T> out(batches * m * n);
  for (std::size_t bl = 0; bl < batches; ++bl) {
    std::size_t oa, obo;
    batch_offsets(bl, oa, obo);
    detail::gemm_nn(a.data().data() + oa * m * k, b.data().data() + obo * k * n, out.data() + bl * m * n, m, k,
                    n, false);
  }
  TensorT<T> result(os, std::move(out));
  TensorT<T> ac = a, bc = b;
  TensorT<T>::attach(result, {a, b}, [ac, bc, m, k, n, batches, batch_offsets](const TensorT<T>& o) {
    const auto& g = o.grad();
    // dA += g . B^T, dB += A^T . g ; broadcast batches accumulate naturally
    const bool need_a = ac.requires_grad();
    const bool need_b = bc.requires_grad();
    if (need_a) ac.mutable_grad();
    if (need_b) bc.mutable_grad();
    for (std::size_t bl = 0; bl < batches; ++bl) {
      std::size_t oa, obo;
      batch_offsets(bl, oa, obo);
      if (need_a)
        detail::gemm_nt(g.data() + bl * m * n, bc.data().data() + obo * k * n,
                        ac.mutable_grad().data() + oa * m * k, m, n, k);
      if (need_b)
        detail::gemm_tn(ac.data().data() + oa * m * k, g.data() + bl * m * n,
                        bc.mutable_grad().data() + obo * k * n, m, k, n);
    }
  });
  return result;
}

// ---- concat / stack / gather -------------------------------------------------

template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: empty input");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw std::invalid_argument("concat: axis out of range for " + shape_str(first));
  std::size_t total_axis = 0;
  for (const auto& p : parts) {
    if (p.ndim() != first.size()) op_shape_error("concat", first, p.shape());
    for (std::size_t i = 0; i < first.size(); ++i)
      if (i != axis && p.shape()[i] != first[i]) op_shape_error("concat", first, p.shape());
    total_axis += p.shape()[axis];
  }
  Shape os = first;
  os[axis] = total_axis;
  const auto [outer, _, inner] = TensorT<T>::axis_split(os, axis);
  std::vector<T> out(shape_size(os));
  std::size_t axis_off = 0;
  for (const auto& p : parts) {
    const std::size_t pa = p.shape()[axis];
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t a = 0; a < pa; ++a)
        for (std::size_t i = 0; i < inner; ++i)
          out[(o * total_axis + axis_off + a) * inner + i] = p.data()[(o * pa + a) * inner + i];
    axis_off += pa;
  }
  TensorT<T> result(os, std::move(out));
  std::vector<std::size_t> extents;
  for (const auto& p : parts) extents.push_back(p.shape()[axis]);
  const std::size_t outer_c = outer, inner_c = inner, total_c = total_axis;
  TensorT<T>::attach(result, parts, [extents, outer_c, inner_c, total_c](const TensorT<T>& o) {
    const auto& g = o.grad();
    std::size_t axis_off = 0;
    for (std::size_t pi = 0; pi < extents.size(); ++pi) {
      const std::size_t pa = extents[pi];
      std::vector<T> gin(o.parent(pi).size());
      for (std::size_t ou = 0; ou < outer_c; ++ou)
        for (std::size_t a = 0; a < pa; ++a)
          for (std::size_t i = 0; i < inner_c; ++i)
            gin[(ou * pa + a) * inner_c + i] = g[(ou * total_c + axis_off + a) * inner_c + i];
      o.parent(pi).accumulate_grad_reduced(gin, o.parent(pi).shape());
      axis_off += pa;
    }
  });
  return result;
}

template <typename T>
TensorT<T> stack(const std::vector<TensorT<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("stack: empty input");
  std::vector<TensorT<T>> expanded;
  expanded.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.shape() != parts[0].shape()) op_shape_error("stack", parts[0].shape(), p.shape());
    Shape s = p.shape();
    s.insert(s.begin() + static_cast<std::ptrdiff_t>(axis), 1);
    expanded.push_back(p.reshape(s));
  }
  return concat(expanded, axis);
}

// Pick one element along `axis` per remaining position. `indices` is laid out
// like the input with `axis` removed.
template <typename T>
TensorT<T> gather(const TensorT<T>& t, std::size_t axis, const std::vector<std::int64_t>& indices) {
  if (axis >= t.ndim()) throw std::invalid_argument("gather: axis out of range for " + shape_str(t.shape()));
  const auto [outer, extent, inner] = TensorT<T>::axis_split(t.shape(), axis);
  if (indices.size() != outer * inner)
    throw std::invalid_argument("gather: index count " + std::to_string(indices.size()) + " does not match " +
                                shape_str(t.shape()) + " minus axis " + std::to_string(axis));
  Shape os;
  for (std::size_t i = 0; i < t.ndim(); ++i)
    if (i != axis) os.push_back(t.shape()[i]);
  std::vector<T> out(outer * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      const std::int64_t a = indices[o * inner + i];
      if (a < 0 || static_cast<std::size_t>(a) >= extent)
        throw std::invalid_argument("gather: index " + std::to_string(a) + " out of bounds for extent " +
                                    std::to_string(extent));
      out[o * inner + i] = t.data()[(o * extent + static_cast<std::size_t>(a)) * inner + i];
    }
  TensorT<T> result(os, std::move(out));
  const std::size_t o_c = outer, e_c = extent, i_c = inner;
  Shape in_shape = t.shape();
  TensorT<T>::attach(result, {t}, [indices, o_c, e_c, i_c, in_shape](const TensorT<T>& o) {
    const auto& g = o.grad();
    std::vector<T> gin(o_c * e_c * i_c, T(0));
    for (std::size_t ou = 0; ou < o_c; ++ou)
      for (std::size_t i = 0; i < i_c; ++i)
        gin[(ou * e_c + static_cast<std::size_t>(indices[ou * i_c + i])) * i_c + i] += g[ou * i_c + i];
    o.parent(0).accumulate_grad_reduced(gin, in_shape);
  });
  return result;
}

// Argmax over the last axis; ties break to the lowest index. No gradient.
template <typename T>
std::vector<std::int64_t> argmax_last(const TensorT<T>& t) {
  const std::size_t cols = t.shape().back();
  const std::size_t rows = t.size() / cols;
  std::vector<std::int64_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = t.data().data() + r * cols;
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c)
      if (x[c] > x[best]) best = c;
    out[r] = static_cast<std::int64_t>(best);
  }
  return out;
}

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

}  // namespace marlbench::num
