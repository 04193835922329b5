#include "marlbench/algorithms/descriptor.hpp"

#include <stdexcept>

namespace marlbench::algorithms {

const std::vector<AlgoDescriptor>& builtin_descriptors() {
  static const std::vector<AlgoDescriptor> table = {
      {"mappo", /*on*/ true, /*ac*/ true, CriticObservability::Full, ActionSupport::Both, true},
      {"ippo", true, true, CriticObservability::Local, ActionSupport::Both, true},
      {"maddpg", false, true, CriticObservability::Full, ActionSupport::Continuous, false},
      {"iddpg", false, true, CriticObservability::Local, ActionSupport::Continuous, false},
      {"masac", false, true, CriticObservability::Full, ActionSupport::Both, true},
      {"isac", false, true, CriticObservability::Local, ActionSupport::Both, true},
      {"qmix", false, false, CriticObservability::NotApplicable, ActionSupport::Discrete, false},
      {"vdn", false, false, CriticObservability::NotApplicable, ActionSupport::Discrete, false},
      {"iql", false, false, CriticObservability::NotApplicable, ActionSupport::Discrete, false},
  };
  return table;
}

const AlgoDescriptor& descriptor_for(const std::string& name) {
  for (const auto& d : builtin_descriptors())
    if (d.name == name) return d;
  std::string valid;
  for (const auto& d : builtin_descriptors()) valid += (valid.empty() ? "" : ", ") + d.name;
  throw std::invalid_argument("unknown algorithm '" + name + "' (valid: " + valid + ")");
}

std::string action_support_str(ActionSupport s) {
  switch (s) {
    case ActionSupport::Continuous: return "continuous";
    case ActionSupport::Discrete: return "discrete";
    case ActionSupport::Both: return "continuous+discrete";
  }
  return "?";
}

envs::ActionVariant match_compatibility(const AlgoDescriptor& algo, const envs::TaskDef& task) {
  const bool can_cont = algo.action_support != ActionSupport::Discrete;
  const bool can_disc = algo.action_support != ActionSupport::Continuous;
  if (task.offers_continuous && task.offers_discrete) {
    // the task's native variant is continuous; a discrete-only algorithm
    // falls back to the discretized version
    if (can_cont) return envs::ActionVariant::Continuous;
    return envs::ActionVariant::Discrete;
  }
  if (task.offers_continuous && can_cont) return envs::ActionVariant::Continuous;
  if (task.offers_discrete && can_disc) return envs::ActionVariant::Discrete;
  const std::string offered = task.offers_continuous ? "continuous" : "discrete";
  throw std::invalid_argument("algorithm '" + algo.name + "' (" + action_support_str(algo.action_support) +
                              ") is incompatible with task '" + task.id + "' (" + offered + " only)");
}

}  // namespace marlbench::algorithms
