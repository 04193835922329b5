#include "marlbench/config/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "marlbench/core/errors.hpp"

namespace marlbench::config {

namespace {

struct RawValue {
  std::vector<std::string> tokens;
  bool is_list = false;
  std::string origin;
};

using RawMap = std::map<std::string, RawValue>;

void flatten_node(const YAML::Node& node, const std::string& prefix, const std::string& origin,
                  RawMap& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string key = prefix.empty() ? kv.first.Scalar() : prefix + "." + kv.first.Scalar();
      flatten_node(kv.second, key, origin, out);
    }
    return;
  }
  RawValue v;
  v.origin = origin;
  if (node.IsSequence()) {
    v.is_list = true;
    for (const auto& item : node) {
      if (!item.IsScalar())
        throw ConfigError("config file " + origin + ": key '" + prefix + "' has a non-scalar list element");
      v.tokens.push_back(item.Scalar());
    }
  } else if (node.IsScalar()) {
    v.tokens.push_back(node.Scalar());
  } else if (node.IsNull()) {
    throw ConfigError("config file " + origin + ": key '" + prefix + "' has no value");
  } else {
    throw ConfigError("config file " + origin + ": key '" + prefix + "' has unsupported structure");
  }
  out[prefix] = std::move(v);
}

RawMap load_yaml_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  RawMap out;
  if (root.IsNull() || !root.IsDefined()) return out;
  if (!root.IsMap()) throw ConfigError("config file " + path + ": top level must be a mapping");
  flatten_node(root, "", path, out);
  return out;
}

bool parse_int_token(const std::string& tok, std::int64_t& out) {
  if (tok.empty()) return false;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool parse_float_token(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

ConfigValue convert_leaf(const SchemaLeaf& leaf, const RawValue& raw) {
  auto fail_type = [&](const std::string& got) -> ConfigError {
    return ConfigError("config key '" + leaf.key + "': expected " + leaf.type_str() + ", got '" + got +
                       "' (from " + raw.origin + ")");
  };
  auto fail_range = [&](const std::string& got) -> ConfigError {
    return ConfigError("config key '" + leaf.key + "': value " + got + " outside valid range " +
                       leaf.range_str() + " (from " + raw.origin + ")");
  };
  auto check_range = [&](double v, const std::string& shown) {
    const bool lo_ok = leaf.min_exclusive ? v > leaf.min : v >= leaf.min;
    const bool hi_ok = leaf.max_exclusive ? v < leaf.max : v <= leaf.max;
    if (!lo_ok || !hi_ok || std::isnan(v)) throw fail_range(shown);
  };

  ConfigValue out;
  out.type = leaf.type;
  if (leaf.type != LeafType::IntList && raw.is_list) throw fail_type("[list]");
  switch (leaf.type) {
    case LeafType::Int: {
      if (!parse_int_token(raw.tokens.at(0), out.i)) throw fail_type(raw.tokens.at(0));
      check_range(static_cast<double>(out.i), raw.tokens.at(0));
      break;
    }
    case LeafType::Float: {
      if (!parse_float_token(raw.tokens.at(0), out.f)) throw fail_type(raw.tokens.at(0));
      check_range(out.f, raw.tokens.at(0));
      break;
    }
    case LeafType::Bool: {
      const std::string& t = raw.tokens.at(0);
      if (t == "true")
        out.b = true;
      else if (t == "false")
        out.b = false;
      else
        throw fail_type(t);
      break;
    }
    case LeafType::String: {
      out.s = raw.tokens.at(0);
      if (!leaf.choices.empty() &&
          std::find(leaf.choices.begin(), leaf.choices.end(), out.s) == leaf.choices.end())
        throw fail_range("'" + out.s + "'");
      break;
    }
    case LeafType::IntList: {
      if (!raw.is_list) throw fail_type(raw.tokens.empty() ? "" : raw.tokens.at(0));
      for (const auto& t : raw.tokens) {
        std::int64_t v;
        if (!parse_int_token(t, v)) throw fail_type(t);
        check_range(static_cast<double>(v), t);
        out.il.push_back(v);
      }
      break;
    }
  }
  return out;
}

void merge_raw(RawMap& dst, const RawMap& src) {
  for (const auto& [k, v] : src) dst[k] = v;
}

std::string join_path(const std::string& root, const std::string& rel) {
  return (std::filesystem::path(root) / rel).string();
}

}  // namespace

std::string ConfigValue::str() const {
  switch (type) {
    case LeafType::Int: return std::to_string(i);
    case LeafType::Float: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof(buf), f);
      return std::string(buf, res.ptr);
    }
    case LeafType::Bool: return b ? "true" : "false";
    case LeafType::String: return s;
    case LeafType::IntList: {
      std::string out = "[";
      for (std::size_t k = 0; k < il.size(); ++k) {
        if (k) out += ", ";
        out += std::to_string(il[k]);
      }
      return out + "]";
    }
  }
  return "?";
}

std::pair<std::string, std::vector<std::string>> parse_override(const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + token + "' is not of the form key=value");
  std::string key = token.substr(0, eq);
  std::string value = token.substr(eq + 1);
  std::vector<std::string> tokens;
  if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
    std::string inner = value.substr(1, value.size() - 2);
    std::string cur;
    for (char c : inner) {
      if (c == ',') {
        tokens.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur += c;
      }
    }
    if (!cur.empty() || !inner.empty()) tokens.push_back(cur);
    return {key, tokens};
  }
  tokens.push_back(value);
  return {key, tokens};
}

std::string default_conf_root() {
  if (const char* env = std::getenv("MARLBENCH_CONF")) return env;
  return "conf";
}

namespace {

ConfigTree validate_raw(const RawMap& raw) {
  // unknown keys first, with a typo suggestion
  for (const auto& [key, value] : raw) {
    if (!find_leaf(key))
      throw ConfigError("unknown config key '" + key + "' (from " + value.origin + "); did you mean '" +
                        nearest_key(key) + "'?");
  }
  ConfigTree tree;
  for (const auto& leaf : config_schema()) {
    auto it = raw.find(leaf.key);
    if (it == raw.end()) throw ConfigError("missing config key '" + leaf.key + "'");
    tree[leaf.key] = convert_leaf(leaf, it->second);
  }
  return tree;
}

void resolve_autos(ConfigTree& tree) {
  if (tree.at("algorithm.anneal_frames").i == 0)
    tree.at("algorithm.anneal_frames").i = std::max<std::int64_t>(1, tree.at("experiment.total_frames").i / 2);
  if (tree.at("experiment.off_policy_train_steps").i == 0)
    tree.at("experiment.off_policy_train_steps").i = tree.at("experiment.frames_per_iteration").i;
}

void cross_validate(const ConfigTree& tree) {
  const auto total = tree.at("experiment.total_frames").i;
  const auto fpi = tree.at("experiment.frames_per_iteration").i;
  const auto envs = tree.at("experiment.n_vector_envs").i;
  if (total < fpi)
    throw ConfigError("experiment.total_frames (" + std::to_string(total) +
                      ") must be >= experiment.frames_per_iteration (" + std::to_string(fpi) + ")");
  if (fpi < envs)
    throw ConfigError("experiment.frames_per_iteration (" + std::to_string(fpi) +
                      ") must be >= experiment.n_vector_envs (" + std::to_string(envs) + ")");
  if (fpi % envs != 0)
    throw ConfigError("experiment.frames_per_iteration (" + std::to_string(fpi) +
                      ") must be a multiple of experiment.n_vector_envs (" + std::to_string(envs) + ")");
  const double scale = tree.at("experiment.reward_scale").f;
  if (!std::isfinite(scale) || scale == 0.0)
    throw ConfigError("experiment.reward_scale must be finite and non-zero");
}

}  // namespace

RunBundle bundle_from_tree(const ConfigTree& tree) {
  cross_validate(tree);
  RunBundle b;
  b.tree = tree;
  b.seed = static_cast<std::uint64_t>(tree.at("seed").i);
  b.algo_name = tree.at("algorithm.name").s;
  b.task_id = tree.at("task.id").s;
  b.model_name = tree.at("model.name").s;

  auto& e = b.experiment;
  e.total_frames = tree.at("experiment.total_frames").i;
  e.frames_per_iteration = static_cast<int>(tree.at("experiment.frames_per_iteration").i);
  e.n_vector_envs = static_cast<int>(tree.at("experiment.n_vector_envs").i);
  e.eval_interval = static_cast<int>(tree.at("experiment.eval_interval").i);
  e.eval_episodes = static_cast<int>(tree.at("experiment.eval_episodes").i);
  e.max_eval_steps = static_cast<int>(tree.at("experiment.max_eval_steps").i);
  e.checkpoint_interval = tree.at("experiment.checkpoint_interval").i;
  e.off_policy_train_steps = static_cast<int>(tree.at("experiment.off_policy_train_steps").i);
  e.share_params_actor = tree.at("experiment.share_params_actor").b;
  e.share_params_critic = tree.at("experiment.share_params_critic").b;
  e.obs_norm = tree.at("experiment.obs_norm").b;
  e.reward_scale = tree.at("experiment.reward_scale").f;

  auto& hp = b.hp;
  hp.gamma = tree.at("algorithm.gamma").f;
  hp.gae_lambda = tree.at("algorithm.gae_lambda").f;
  hp.ppo_clip = tree.at("algorithm.ppo_clip").f;
  hp.entropy_coef = tree.at("algorithm.entropy_coef").f;
  hp.tau = tree.at("algorithm.tau").f;
  hp.sac_alpha = tree.at("algorithm.sac_alpha").f;
  hp.epsilon_start = tree.at("algorithm.epsilon_start").f;
  hp.epsilon_end = tree.at("algorithm.epsilon_end").f;
  hp.anneal_frames = tree.at("algorithm.anneal_frames").i;
  hp.lr = tree.at("algorithm.lr").f;
  hp.minibatches = static_cast<int>(tree.at("algorithm.minibatches").i);
  hp.epochs = static_cast<int>(tree.at("algorithm.epochs").i);
  hp.target_update_period = static_cast<int>(tree.at("algorithm.target_update_period").i);
  hp.ddpg_sigma = tree.at("algorithm.ddpg_sigma").f;
  hp.buffer_capacity = tree.at("algorithm.buffer_capacity").i;
  hp.batch_size = static_cast<int>(tree.at("algorithm.batch_size").i);
  hp.grad_clip = tree.at("algorithm.grad_clip").f;
  hp.validate();

  auto& m = b.model;
  m.kind = tree.at("model.kind").s == "mlp" ? models::ModelKind::Mlp : models::ModelKind::DeepSets;
  m.activation =
      tree.at("model.activation").s == "tanh" ? models::Activation::Tanh : models::Activation::Relu;
  auto to_int_vec = [](const std::vector<std::int64_t>& v) {
    std::vector<int> out;
    for (auto x : v) out.push_back(static_cast<int>(x));
    return out;
  };
  m.layer_widths = to_int_vec(tree.at("model.layer_widths").il);
  m.phi_widths = to_int_vec(tree.at("model.phi_widths").il);
  m.rho_widths = to_int_vec(tree.at("model.rho_widths").il);
  m.validate();

  try {
    const auto task_id = envs::parse_task_id(b.task_id);
    b.task = envs::make_task(task_id, static_cast<int>(tree.at("task.n_agents").i),
                             static_cast<int>(tree.at("task.horizon").i), tree.at("task.dt").f,
                             tree.at("task.world_bound").f);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return b;
}

RunBundle load_config(const ConfigSources& sources) {
  for (const auto& ov : sources.overrides) {
    const auto key = parse_override(ov).first;
    if (key == "algorithm.name" || key == "task.id" || key == "model.name")
      throw ConfigError("override '" + ov + "': use the algorithm= / task= / model= selections instead");
  }

  std::string task_base;
  try {
    task_base = envs::parse_task_id(sources.task).base;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  RawMap raw;
  merge_raw(raw, load_yaml_file(join_path(sources.conf_root, "experiment/base.yaml")));
  merge_raw(raw, load_yaml_file(join_path(sources.conf_root, "algorithm/" + sources.algorithm + ".yaml")));
  merge_raw(raw, load_yaml_file(join_path(sources.conf_root, "task/" + task_base + ".yaml")));
  merge_raw(raw, load_yaml_file(join_path(sources.conf_root, "model/" + sources.model + ".yaml")));
  for (const auto& f : sources.user_files) merge_raw(raw, load_yaml_file(f));
  for (const auto& ov : sources.overrides) {
    auto [key, tokens] = parse_override(ov);
    RawValue v;
    v.tokens = std::move(tokens);
    v.is_list = ov.find('[') != std::string::npos;
    v.origin = "override";
    raw[key] = std::move(v);
  }

  // selections are authoritative
  raw["algorithm.name"] = {{sources.algorithm}, false, "selection"};
  raw["task.id"] = {{sources.task}, false, "selection"};
  raw["model.name"] = {{sources.model}, false, "selection"};

  ConfigTree tree = validate_raw(raw);
  resolve_autos(tree);
  return bundle_from_tree(tree);
}

std::string snapshot_string(const ConfigTree& tree) {
  // nested YAML, keys sorted by the tree ordering
  std::map<std::string, std::vector<std::pair<std::string, const ConfigValue*>>> sections;
  std::vector<std::pair<std::string, const ConfigValue*>> top;
  for (const auto& [key, value] : tree) {
    const auto dot = key.find('.');
    if (dot == std::string::npos)
      top.push_back({key, &value});
    else
      sections[key.substr(0, dot)].push_back({key.substr(dot + 1), &value});
  }
  std::ostringstream os;
  for (const auto& [key, value] : top) os << key << ": " << value->str() << "\n";
  for (const auto& [section, entries] : sections) {
    os << section << ":\n";
    for (const auto& [key, value] : entries) os << "  " << key << ": " << value->str() << "\n";
  }
  return os.str();
}

void write_snapshot(const ConfigTree& tree, const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot write config snapshot: " + path);
  file << snapshot_string(tree);
}

ConfigTree parse_snapshot_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config snapshot: ") + e.what());
  }
  RawMap raw;
  if (!root.IsMap()) throw ConfigError("config snapshot: top level must be a mapping");
  flatten_node(root, "", "snapshot", raw);
  ConfigTree tree = validate_raw(raw);
  resolve_autos(tree);
  return tree;
}

ConfigTree parse_snapshot(const std::string& path) {
  RawMap raw = load_yaml_file(path);
  ConfigTree tree = validate_raw(raw);
  resolve_autos(tree);
  return tree;
}

}  // namespace marlbench::config
