#pragma once

#include <memory>
#include <string>
#include <vector>

#include "marlbench/envs/domain_spec.hpp"
#include "marlbench/numeric/optim.hpp"
#include "marlbench/numeric/rng.hpp"
#include "marlbench/numeric/tensor.hpp"

namespace marlbench::models {

using envs::DomainSpec;
using num::Param;
using num::RngStream;
using num::Tensor;

enum class ModelKind { Mlp, DeepSets };
enum class Activation { Tanh, Relu };

// How an instantiated network relates to the agent group:
//  - Decentralized:      [B, n, d_in] -> [B, n, d_out], one value per agent
//  - CentralizedLocal:   [B, n, d_in] -> [B, d_out], aggregates local inputs
//  - CentralizedGlobal:  [B, d_in]    -> [B, d_out], consumes a global input
enum class InstMode { Decentralized, CentralizedLocal, CentralizedGlobal };

std::string mode_str(InstMode mode);

struct ModelConfig {
  ModelKind kind = ModelKind::Mlp;
  std::vector<int> layer_widths = {32, 32};
  Activation activation = Activation::Tanh;
  std::vector<int> phi_widths = {32};
  std::vector<int> rho_widths = {32};

  void validate() const;
};

// A linear map over the trailing feature axis. When stacked, each agent has
// its own weight matrix and the input must carry the agent axis.
struct LinearLayer {
  Tensor weight;  // [d_in, d_out] or [n, d_in, d_out]
  Tensor bias;    // [d_out] or [n, d_out]
  bool stacked = false;

  Tensor apply(const Tensor& x) const;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual Tensor forward(const Tensor& input) const = 0;
  virtual std::vector<Param> parameters() const = 0;

  InstMode mode() const { return mode_; }
  int n_agents() const { return n_agents_; }
  bool share_params() const { return share_params_; }
  const DomainSpec& input_spec() const { return input_spec_; }
  const DomainSpec& output_spec() const { return output_spec_; }
  int output_dim() const { return output_spec_.feature_dim(); }

  // Number of independent parameter sets held along the agent axis.
  virtual int parameter_stacks() const = 0;

 protected:
  void check_input(const Tensor& x) const;

  InstMode mode_ = InstMode::Decentralized;
  int n_agents_ = 1;
  bool share_params_ = true;
  DomainSpec input_spec_;
  DomainSpec output_spec_;
};

using ModelPtr = std::shared_ptr<Model>;

// Build a network from its blueprint. Parameters draw from `init_rng`
// uniformly in +-sqrt(1/fan_in); the final layer is additionally scaled by
// `final_layer_scale` (used to shrink initial policy outputs).
ModelPtr instantiate(const ModelConfig& config, InstMode mode, int n_agents, bool share_params,
                     const DomainSpec& input_spec, const DomainSpec& output_spec, RngStream& init_rng,
                     double final_layer_scale = 1.0);

// Compose models into a pipeline. Each junction requires matching specs and
// a legal mode transition (a centralized stage may follow decentralized
// stages, never the reverse). A single-element chain is that model.
ModelPtr chain(const std::vector<ModelPtr>& stages);

// Copy every parameter value of `src` into `dst` (shapes must match).
void copy_parameters(const Model& src, Model& dst);

// target <- tau * online + (1 - tau) * target
void soft_update(const Model& online, Model& target, double tau);

// Construction counter used to verify that configuration loading alone
// instantiates nothing.
long model_construction_count();

}  // namespace marlbench::models
