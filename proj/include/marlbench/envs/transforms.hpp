#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "marlbench/envs/env.hpp"

namespace marlbench::envs {

// Batch-level post-processing of environment data. Transforms declare the
// spec change they make; incompatibilities surface when the pipeline is
// built, not at step time.
class Transform {
 public:
  virtual ~Transform() = default;
  virtual std::string name() const = 0;
  virtual void check_specs(const std::vector<GroupSpec>& specs) const {}
  virtual void adjust_specs(std::vector<GroupSpec>& specs) const {}
  // Update running statistics from freshly collected observations.
  virtual void observe(std::size_t group, const std::vector<float>& obs, int n_agents, int d_obs) {}
  virtual void apply_obs(std::size_t group, std::vector<float>& obs) const {}
  virtual void apply_reward(std::size_t group, std::vector<float>& reward) const {}
  virtual void save(std::ostream& os) const;
  virtual void load(std::istream& is);
};

// Scale every reward by a constant.
class RewardScale : public Transform {
 public:
  explicit RewardScale(double scale);
  std::string name() const override { return "reward_scale"; }
  void apply_reward(std::size_t group, std::vector<float>& reward) const override;

 private:
  double scale_;
};

// Observation normalization by running mean/variance, frozen at evaluation.
// Outputs are clipped to +-10 standard deviations.
class ObsNormalize : public Transform {
 public:
  std::string name() const override { return "obs_normalize"; }
  void check_specs(const std::vector<GroupSpec>& specs) const override;
  void adjust_specs(std::vector<GroupSpec>& specs) const override;
  void observe(std::size_t group, const std::vector<float>& obs, int n_agents, int d_obs) override;
  void apply_obs(std::size_t group, std::vector<float>& obs) const override;
  void save(std::ostream& os) const override;
  void load(std::istream& is) override;

 private:
  struct Stats {
    std::vector<double> mean, m2;
    std::int64_t count = 0;
  };
  std::vector<Stats> stats_;  // per group
};

// Ordered transforms applied to every StepBatch. A frozen pipeline applies
// its statistics without updating them (evaluation mode).
class TransformPipeline {
 public:
  TransformPipeline() = default;
  TransformPipeline(std::vector<std::shared_ptr<Transform>> transforms,
                    const std::vector<GroupSpec>& specs);

  // The specs downstream consumers see.
  const std::vector<GroupSpec>& specs() const { return specs_; }

  void set_frozen(bool frozen) { frozen_ = frozen; }
  bool frozen() const { return frozen_; }
  bool empty() const { return transforms_.empty(); }

  // Normalize a raw observation buffer in place (policy input path).
  void process_obs(std::size_t group, std::vector<float>& obs, int n_agents, int d_obs);

  // Apply all transforms to a collected batch (observations already
  // processed through process_obs stay consistent because apply is
  // idempotent on the raw copies carried by the batch).
  void apply(StepBatch& batch);

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  std::vector<std::shared_ptr<Transform>> transforms_;
  std::vector<GroupSpec> specs_;
  bool frozen_ = false;
};

}  // namespace marlbench::envs
