#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace marlbench::envs {

// Description of an observation, action, or state space.
struct DomainSpec {
  enum class Kind { Continuous, Discrete };

  Kind kind = Kind::Continuous;
  std::vector<int> shape;  // continuous extents
  double low = -1.0;
  double high = 1.0;
  int n = 0;  // discrete cardinality
  bool maskable = false;

  static DomainSpec continuous(std::vector<int> shape, double low, double high) {
    DomainSpec s;
    s.kind = Kind::Continuous;
    s.shape = std::move(shape);
    s.low = low;
    s.high = high;
    s.validate();
    return s;
  }

  static DomainSpec discrete(int n, bool maskable = false) {
    DomainSpec s;
    s.kind = Kind::Discrete;
    s.n = n;
    s.maskable = maskable;
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == Kind::Continuous) {
      if (shape.empty()) throw std::invalid_argument("domain spec: continuous shape must be non-empty");
      for (int d : shape)
        if (d <= 0) throw std::invalid_argument("domain spec: non-positive extent");
      if (!(low < high)) throw std::invalid_argument("domain spec: low must be < high");
    } else {
      if (n < 2) throw std::invalid_argument("domain spec: discrete n must be >= 2");
    }
  }

  // Feature width when values of this space are fed to or produced by a
  // model: flattened extent for continuous, one logit per action for
  // discrete.
  int feature_dim() const {
    if (kind == Kind::Discrete) return n;
    int d = 1;
    for (int e : shape) d *= e;
    return d;
  }

  bool operator==(const DomainSpec& o) const {
    return kind == o.kind && shape == o.shape && low == o.low && high == o.high && n == o.n &&
           maskable == o.maskable;
  }

  std::string str() const {
    if (kind == Kind::Discrete) return "discrete(" + std::to_string(n) + ")";
    std::string s = "continuous([";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "])";
  }
};

// One agent group: agents whose tensors share shapes and stack on an agent
// axis. Groups train independently.
struct GroupSpec {
  std::string name;
  std::vector<std::string> agent_names;
  DomainSpec observation;
  DomainSpec action;
  bool has_global_state = false;
  std::optional<DomainSpec> state;

  int n_agents() const { return static_cast<int>(agent_names.size()); }
};

}  // namespace marlbench::envs
