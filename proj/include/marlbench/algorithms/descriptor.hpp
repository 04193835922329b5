#pragma once

#include <string>
#include <vector>

#include "marlbench/envs/env.hpp"

namespace marlbench::algorithms {

enum class CriticObservability { Full, Local, NotApplicable };
enum class ActionSupport { Continuous, Discrete, Both };

// Classification of one training algorithm: on/off policy, actor-critic,
// critic observability, supported action kinds, probabilistic actor.
struct AlgoDescriptor {
  std::string name;
  bool on_policy = false;
  bool actor_critic = false;
  CriticObservability critic_observability = CriticObservability::NotApplicable;
  ActionSupport action_support = ActionSupport::Both;
  bool probabilistic_actor = false;

  bool supports(envs::ActionVariant v) const {
    if (action_support == ActionSupport::Both) return true;
    return (action_support == ActionSupport::Continuous) == (v == envs::ActionVariant::Continuous);
  }
};

// The nine built-in algorithms.
const std::vector<AlgoDescriptor>& builtin_descriptors();

// Lookup by lowercase name; throws listing valid names.
const AlgoDescriptor& descriptor_for(const std::string& name);

// Best-effort version matching: pick the task variant the algorithm can run.
// Prefers the task's native variant; when both sides support both kinds the
// continuous version wins. Throws when no variant fits, naming both parties.
envs::ActionVariant match_compatibility(const AlgoDescriptor& algo, const envs::TaskDef& task);

std::string action_support_str(ActionSupport s);

}  // namespace marlbench::algorithms
