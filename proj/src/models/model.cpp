#include "marlbench/models/model.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace marlbench::models {

namespace {

std::atomic<long> g_constructions{0};

using num::Shape;

Tensor init_tensor(Shape shape, double bound, double scale, RngStream& rng) {
  std::vector<float> vals(num::shape_size(shape));
  for (auto& v : vals) v = static_cast<float>(rng.uniform(-bound, bound) * scale);
  Tensor t(std::move(shape), std::move(vals));
  t.set_requires_grad(true);
  return t;
}

LinearLayer make_linear(int n_agents, int d_in, int d_out, bool stacked, double scale, RngStream& rng) {
  const double bound = std::sqrt(1.0 / d_in);
  LinearLayer layer;
  layer.stacked = stacked;
  if (stacked) {
    layer.weight = init_tensor({static_cast<std::size_t>(n_agents), static_cast<std::size_t>(d_in),
                                static_cast<std::size_t>(d_out)},
                               bound, scale, rng);
    layer.bias = init_tensor({static_cast<std::size_t>(n_agents), static_cast<std::size_t>(d_out)}, bound,
                             scale, rng);
  } else {
    layer.weight = init_tensor({static_cast<std::size_t>(d_in), static_cast<std::size_t>(d_out)}, bound,
                               scale, rng);
    layer.bias = init_tensor({static_cast<std::size_t>(d_out)}, bound, scale, rng);
  }
  return layer;
}

Tensor activate(const Tensor& x, Activation act) {
  return act == Activation::Tanh ? x.tanh() : x.relu();
}

// widths = hidden widths; a final linear layer maps to d_out.
std::vector<LinearLayer> make_stack(const std::vector<int>& widths, int n_agents, int d_in, int d_out,
                                    bool stacked, double final_scale, RngStream& rng) {
  std::vector<LinearLayer> layers;
  int d = d_in;
  for (int w : widths) {
    layers.push_back(make_linear(n_agents, d, w, stacked, 1.0, rng));
    d = w;
  }
  layers.push_back(make_linear(n_agents, d, d_out, stacked, final_scale, rng));
  return layers;
}

Tensor run_stack(const std::vector<LinearLayer>& layers, Tensor v, Activation act) {
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) v = activate(layers[i].apply(v), act);
  return layers.back().apply(v);
}

void collect_params(const std::vector<LinearLayer>& layers, const std::string& prefix,
                    std::vector<Param>& out) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.push_back({prefix + "w" + std::to_string(i), layers[i].weight});
    out.push_back({prefix + "b" + std::to_string(i), layers[i].bias});
  }
}

}  // namespace

std::string mode_str(InstMode mode) {
  switch (mode) {
    case InstMode::Decentralized: return "decentralized";
    case InstMode::CentralizedLocal: return "centralized_local";
    case InstMode::CentralizedGlobal: return "centralized_global";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto check_widths = [](const std::vector<int>& w, const char* what) {
    if (w.empty()) throw std::invalid_argument(std::string("model config: ") + what + " needs at least one layer");
    for (int x : w)
      if (x <= 0) throw std::invalid_argument(std::string("model config: ") + what + " widths must be positive");
  };
  if (kind == ModelKind::Mlp) {
    check_widths(layer_widths, "layer_widths");
  } else {
    check_widths(phi_widths, "phi_widths");
    check_widths(rho_widths, "rho_widths");
  }
}

Tensor LinearLayer::apply(const Tensor& x) const {
  if (!stacked) return matmul(x, weight) + bias;
  // per-agent weights: [B, n, d] x [n, d, h] -> [B, n, h]
  const auto& s = x.shape();
  if (s.size() != 3)
    throw std::invalid_argument("linear: stacked layer expects rank-3 input, received " + num::shape_str(s));
  const std::size_t batch = s[0], agents = s[1], d = s[2];
  Tensor lifted = x.reshape({batch, agents, 1, d});
  Tensor prod = matmul(lifted, weight);
  const std::size_t h = weight.shape()[2];
  return prod.reshape({batch, agents, h}) + bias;
}

void Model::check_input(const Tensor& x) const {
  const int d_in = input_spec_.feature_dim();
  const auto& s = x.shape();
  auto fail = [&](const std::string& expected) {
    throw std::invalid_argument("model forward (" + mode_str(mode_) + "): expected input " + expected +
                                ", received " + num::shape_str(s));
  };
  if (mode_ == InstMode::CentralizedGlobal) {
    if (s.size() != 2 || s[1] != static_cast<std::size_t>(d_in))
      fail("[B, " + std::to_string(d_in) + "]");
  } else {
    if (s.size() != 3 || s[1] != static_cast<std::size_t>(n_agents_) || s[2] != static_cast<std::size_t>(d_in))
      fail("[B, " + std::to_string(n_agents_) + ", " + std::to_string(d_in) + "]");
  }
}

namespace {

class Mlp : public Model {
 public:
  Mlp(const ModelConfig& config, InstMode mode, int n_agents, bool share_params, const DomainSpec& in,
      const DomainSpec& out, RngStream& rng, double final_scale) {
    ++g_constructions;
    mode_ = mode;
    n_agents_ = n_agents;
    share_params_ = share_params;
    input_spec_ = in;
    output_spec_ = out;
    act_ = config.activation;
    const int d_in = in.feature_dim();
    const int d_out = out.feature_dim();
    const bool stacked = mode == InstMode::Decentralized && !share_params;
    const int eff_in = mode == InstMode::CentralizedLocal ? d_in * n_agents : d_in;
    layers_ = make_stack(config.layer_widths, n_agents, eff_in, d_out, stacked, final_scale, rng);
    stacked_ = stacked;
  }

  Tensor forward(const Tensor& input) const override {
    check_input(input);
    Tensor v = input;
    if (mode_ == InstMode::CentralizedLocal) {
      const auto& s = input.shape();
      v = v.reshape({s[0], s[1] * s[2]});
    }
    return run_stack(layers_, v, act_);
  }

  std::vector<Param> parameters() const override {
    std::vector<Param> out;
    collect_params(layers_, "", out);
    return out;
  }

  int parameter_stacks() const override { return stacked_ ? n_agents_ : 1; }

 private:
  std::vector<LinearLayer> layers_;
  Activation act_;
  bool stacked_ = false;
};

class DeepSets : public Model {
 public:
  DeepSets(const ModelConfig& config, InstMode mode, int n_agents, bool share_params, const DomainSpec& in,
           const DomainSpec& out, RngStream& rng, double final_scale) {
    ++g_constructions;
    mode_ = mode;
    n_agents_ = n_agents;
    share_params_ = share_params;
    input_spec_ = in;
    output_spec_ = out;
    act_ = config.activation;
    const int d_in = in.feature_dim();
    const int d_out = out.feature_dim();
    // phi must stay shared across agents in aggregated mode, otherwise the
    // sum over the agent axis is not permutation invariant.
    const bool stacked = mode == InstMode::Decentralized && !share_params;
    stacked_ = stacked;
    const int p = config.phi_widths.back();
    phi_.reserve(config.phi_widths.size());
    int d = d_in;
    for (int w : config.phi_widths) {
      phi_.push_back(make_linear(n_agents, d, w, stacked, 1.0, rng));
      d = w;
    }
    rho_ = make_stack(config.rho_widths, n_agents, p, d_out, stacked, final_scale, rng);
  }

  Tensor forward(const Tensor& input) const override {
    check_input(input);
    Tensor v = input;
    for (const auto& layer : phi_) v = activate(layer.apply(v), act_);
    if (mode_ == InstMode::CentralizedLocal) v = v.sum(1);  // aggregate the agent axis
    return run_stack(rho_, v, act_);
  }

  std::vector<Param> parameters() const override {
    std::vector<Param> out;
    collect_params(phi_, "phi.", out);
    collect_params(rho_, "rho.", out);
    return out;
  }

  int parameter_stacks() const override { return stacked_ ? n_agents_ : 1; }

 private:
  std::vector<LinearLayer> phi_;
  std::vector<LinearLayer> rho_;
  Activation act_;
  bool stacked_ = false;
};

class ChainModel : public Model {
 public:
  explicit ChainModel(std::vector<ModelPtr> stages) : stages_(std::move(stages)) {
    ++g_constructions;
    const Model& first = *stages_.front();
    const Model& last = *stages_.back();
    n_agents_ = first.n_agents();
    share_params_ = first.share_params();
    input_spec_ = first.input_spec();
    output_spec_ = last.output_spec();
    if (last.mode() == InstMode::Decentralized)
      mode_ = InstMode::Decentralized;
    else
      mode_ = first.mode() == InstMode::CentralizedGlobal ? InstMode::CentralizedGlobal
                                                          : InstMode::CentralizedLocal;
  }

  Tensor forward(const Tensor& input) const override {
    Tensor v = input;
    for (const auto& stage : stages_) v = stage->forward(v);
    return v;
  }

  std::vector<Param> parameters() const override {
    std::vector<Param> out;
    for (std::size_t i = 0; i < stages_.size(); ++i)
      for (auto& p : stages_[i]->parameters())
        out.push_back({"stage" + std::to_string(i) + "." + p.name, p.tensor});
    return out;
  }

  int parameter_stacks() const override {
    int stacks = 1;
    for (const auto& s : stages_) stacks = std::max(stacks, s->parameter_stacks());
    return stacks;
  }

 private:
  std::vector<ModelPtr> stages_;
};

bool legal_transition(InstMode from, InstMode to) {
  switch (from) {
    case InstMode::Decentralized:
      return to == InstMode::Decentralized || to == InstMode::CentralizedLocal;
    case InstMode::CentralizedLocal:
    case InstMode::CentralizedGlobal:
      return to == InstMode::CentralizedGlobal;
  }
  return false;
}

}  // namespace

ModelPtr instantiate(const ModelConfig& config, InstMode mode, int n_agents, bool share_params,
                     const DomainSpec& input_spec, const DomainSpec& output_spec, RngStream& init_rng,
                     double final_layer_scale) {
  config.validate();
  if (n_agents < 1) throw std::invalid_argument("instantiate: n_agents must be >= 1");
  if (config.kind == ModelKind::DeepSets && mode == InstMode::CentralizedGlobal)
    throw std::invalid_argument(
        "instantiate: deepsets cannot run in centralized_global mode (a flat global input has no set axis)");
  if (config.kind == ModelKind::Mlp)
    return std::make_shared<Mlp>(config, mode, n_agents, share_params, input_spec, output_spec, init_rng,
                                 final_layer_scale);
  return std::make_shared<DeepSets>(config, mode, n_agents, share_params, input_spec, output_spec, init_rng,
                                    final_layer_scale);
}

ModelPtr chain(const std::vector<ModelPtr>& stages) {
  if (stages.empty()) throw std::invalid_argument("chain: no models given");
  if (stages.size() == 1) return stages[0];
  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    const Model& a = *stages[i];
    const Model& b = *stages[i + 1];
    if (!(a.output_spec() == b.input_spec()))
      throw std::invalid_argument("chain: spec mismatch at junction " + std::to_string(i) + "->" +
                                  std::to_string(i + 1) + " (" + a.output_spec().str() + " vs " +
                                  b.input_spec().str() + ")");
    if (!legal_transition(a.mode(), b.mode()))
      throw std::invalid_argument("chain: illegal mode transition at junction " + std::to_string(i) + "->" +
                                  std::to_string(i + 1) + " (" + mode_str(a.mode()) + " -> " +
                                  mode_str(b.mode()) + ")");
    if (a.mode() != InstMode::CentralizedGlobal && b.mode() != InstMode::CentralizedGlobal &&
        a.n_agents() != b.n_agents())
      throw std::invalid_argument("chain: agent count mismatch at junction " + std::to_string(i));
  }
  return std::make_shared<ChainModel>(stages);
}

void copy_parameters(const Model& src, Model& dst) {
  auto sp = src.parameters();
  auto dp = dst.parameters();
  if (sp.size() != dp.size()) throw std::invalid_argument("copy_parameters: parameter count mismatch");
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (sp[i].tensor.shape() != dp[i].tensor.shape())
      throw std::invalid_argument("copy_parameters: shape mismatch for " + sp[i].name);
    dp[i].tensor.mutable_data() = sp[i].tensor.data();
  }
}

void soft_update(const Model& online, Model& target, double tau) {
  auto op = online.parameters();
  auto tp = target.parameters();
  if (op.size() != tp.size()) throw std::invalid_argument("soft_update: parameter count mismatch");
  for (std::size_t i = 0; i < op.size(); ++i) {
    const auto& src = op[i].tensor.data();
    auto& dst = tp[i].tensor.mutable_data();
    for (std::size_t j = 0; j < dst.size(); ++j)
      dst[j] = static_cast<float>(tau * src[j] + (1.0 - tau) * dst[j]);
  }
}

long model_construction_count() { return g_constructions.load(); }

}  // namespace marlbench::models
