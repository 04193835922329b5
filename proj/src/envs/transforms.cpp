#include "marlbench/envs/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "marlbench/core/binio.hpp"

namespace marlbench::envs {

void Transform::save(std::ostream&) const {}
void Transform::load(std::istream&) {}

RewardScale::RewardScale(double scale) : scale_(scale) {
  if (!std::isfinite(scale) || scale == 0.0)
    throw std::invalid_argument("reward_scale: scale must be finite and non-zero");
}

void RewardScale::apply_reward(std::size_t, std::vector<float>& reward) const {
  for (float& r : reward) r = static_cast<float>(r * scale_);
}

void ObsNormalize::check_specs(const std::vector<GroupSpec>& specs) const {
  for (const auto& g : specs)
    if (g.observation.kind != DomainSpec::Kind::Continuous)
      throw std::invalid_argument("obs_normalize: group '" + g.name + "' has non-continuous observations");
}

void ObsNormalize::adjust_specs(std::vector<GroupSpec>& specs) const {
  for (auto& g : specs) {
    g.observation.low = -10.0;
    g.observation.high = 10.0;
  }
}

void ObsNormalize::observe(std::size_t group, const std::vector<float>& obs, int n_agents, int d_obs) {
  if (stats_.size() <= group) stats_.resize(group + 1);
  auto& st = stats_[group];
  if (st.mean.empty()) {
    st.mean.assign(d_obs, 0.0);
    st.m2.assign(d_obs, 0.0);
  }
  const std::size_t rows = obs.size() / static_cast<std::size_t>(d_obs);
  (void)n_agents;
  for (std::size_t r = 0; r < rows; ++r) {
    ++st.count;
    for (int f = 0; f < d_obs; ++f) {
      const double x = obs[r * d_obs + f];
      const double delta = x - st.mean[f];
      st.mean[f] += delta / static_cast<double>(st.count);
      st.m2[f] += delta * (x - st.mean[f]);
    }
  }
}

void ObsNormalize::apply_obs(std::size_t group, std::vector<float>& obs) const {
  if (group >= stats_.size() || stats_[group].count == 0) return;
  const auto& st = stats_[group];
  const int d = static_cast<int>(st.mean.size());
  const std::size_t rows = obs.size() / static_cast<std::size_t>(d);
  for (std::size_t r = 0; r < rows; ++r)
    for (int f = 0; f < d; ++f) {
      const double var = st.m2[f] / static_cast<double>(st.count);
      double z = (obs[r * d + f] - st.mean[f]) / std::sqrt(var + 1e-5);
      obs[r * d + f] = static_cast<float>(std::clamp(z, -10.0, 10.0));
    }
}

void ObsNormalize::save(std::ostream& os) const {
  binio::write_pod<std::uint64_t>(os, stats_.size());
  for (const auto& st : stats_) {
    binio::write_vec(os, st.mean);
    binio::write_vec(os, st.m2);
    binio::write_pod<std::int64_t>(os, st.count);
  }
}

void ObsNormalize::load(std::istream& is) {
  stats_.resize(binio::read_pod<std::uint64_t>(is));
  for (auto& st : stats_) {
    st.mean = binio::read_vec<double>(is);
    st.m2 = binio::read_vec<double>(is);
    st.count = binio::read_pod<std::int64_t>(is);
  }
}

TransformPipeline::TransformPipeline(std::vector<std::shared_ptr<Transform>> transforms,
                                     const std::vector<GroupSpec>& specs)
    : transforms_(std::move(transforms)), specs_(specs) {
  for (const auto& t : transforms_) t->check_specs(specs_);
  for (const auto& t : transforms_) t->adjust_specs(specs_);
}

void TransformPipeline::process_obs(std::size_t group, std::vector<float>& obs, int n_agents, int d_obs) {
  for (auto& t : transforms_) {
    if (!frozen_) t->observe(group, obs, n_agents, d_obs);
    t->apply_obs(group, obs);
  }
}

void TransformPipeline::apply(StepBatch& batch) {
  for (auto& t : transforms_) {
    for (std::size_t g = 0; g < batch.groups.size(); ++g) {
      t->apply_obs(g, batch.groups[g].obs);
      t->apply_obs(g, batch.groups[g].next_obs);
      t->apply_reward(g, batch.groups[g].reward);
    }
  }
}

void TransformPipeline::save(std::ostream& os) const {
  for (const auto& t : transforms_) t->save(os);
}

void TransformPipeline::load(std::istream& is) {
  for (auto& t : transforms_) t->load(is);
}

}  // namespace marlbench::envs
