#include "marlbench/algorithms/algorithm.hpp"

#include <stdexcept>

#include "marlbench/core/binio.hpp"

namespace marlbench::algorithms {

std::unique_ptr<Algorithm> make_ppo(const AlgoContext& ctx, RngStream& init_rng);
std::unique_ptr<Algorithm> make_ddpg(const AlgoContext& ctx, RngStream& init_rng);
std::unique_ptr<Algorithm> make_sac(const AlgoContext& ctx, RngStream& init_rng);
std::unique_ptr<Algorithm> make_qlearn(const AlgoContext& ctx, RngStream& init_rng);

std::unique_ptr<Algorithm> make_algorithm(const AlgoContext& ctx, RngStream& init_rng) {
  const std::string& name = ctx.desc.name;
  if (name == "mappo" || name == "ippo") return make_ppo(ctx, init_rng);
  if (name == "maddpg" || name == "iddpg") return make_ddpg(ctx, init_rng);
  if (name == "masac" || name == "isac") return make_sac(ctx, init_rng);
  if (name == "qmix" || name == "vdn" || name == "iql") return make_qlearn(ctx, init_rng);
  throw std::invalid_argument("make_algorithm: unknown algorithm '" + name + "'");
}

int critic_obs_dim(bool full_obs, int n_agents, int d_obs, int d_state) {
  if (!full_obs) return d_obs;
  return d_state > 0 ? d_state : n_agents * d_obs;
}

std::vector<float> critic_obs_rows(const std::vector<float>& obs, const std::vector<float>& state, int B,
                                   int n, int d_obs, int d_state, bool full_obs) {
  if (!full_obs) return obs;
  const int dg = critic_obs_dim(true, n, d_obs, d_state);
  std::vector<float> rows(static_cast<std::size_t>(B) * n * dg);
  for (int b = 0; b < B; ++b) {
    const float* src = d_state > 0 ? state.data() + static_cast<std::size_t>(b) * d_state
                                   : obs.data() + static_cast<std::size_t>(b) * n * d_obs;
    for (int i = 0; i < n; ++i) {
      float* dst = rows.data() + (static_cast<std::size_t>(b) * n + i) * dg;
      for (int f = 0; f < dg; ++f) dst[f] = src[f];
    }
  }
  return rows;
}

std::vector<float> tile_joint_actions(const std::vector<float>& actions, int B, int n, int d_act) {
  const int w = n * d_act;
  std::vector<float> rows(static_cast<std::size_t>(B) * n * w);
  for (int b = 0; b < B; ++b) {
    const float* src = actions.data() + static_cast<std::size_t>(b) * w;
    for (int i = 0; i < n; ++i) {
      float* dst = rows.data() + (static_cast<std::size_t>(b) * n + i) * w;
      for (int f = 0; f < w; ++f) dst[f] = src[f];
    }
  }
  return rows;
}

std::vector<float> append_features(const std::vector<float>& a, int da, const std::vector<float>& b, int db,
                                   std::size_t rows) {
  if (a.size() != rows * static_cast<std::size_t>(da) || b.size() != rows * static_cast<std::size_t>(db))
    throw std::invalid_argument("append_features: block sizes do not match row count");
  std::vector<float> out(rows * static_cast<std::size_t>(da + db));
  for (std::size_t r = 0; r < rows; ++r) {
    float* dst = out.data() + r * (da + db);
    const float* pa = a.data() + r * da;
    const float* pb = b.data() + r * db;
    for (int f = 0; f < da; ++f) dst[f] = pa[f];
    for (int f = 0; f < db; ++f) dst[da + f] = pb[f];
  }
  return out;
}

void save_params(std::ostream& os, const std::vector<Param>& params) {
  binio::write_pod<std::uint64_t>(os, params.size());
  for (const auto& p : params) {
    binio::write_string(os, p.name);
    const auto& shape = p.tensor.shape();
    binio::write_pod<std::uint64_t>(os, shape.size());
    for (auto d : shape) binio::write_pod<std::uint64_t>(os, d);
    binio::write_vec(os, p.tensor.data());
  }
}

void load_params(std::istream& is, const std::vector<Param>& params) {
  const auto count = binio::read_pod<std::uint64_t>(is);
  if (count != params.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (const auto& p : params) {
    const std::string name = binio::read_string(is);
    if (name != p.name) throw std::runtime_error("checkpoint: parameter order mismatch at '" + name + "'");
    const auto rank = binio::read_pod<std::uint64_t>(is);
    num::Shape shape(rank);
    for (auto& d : shape) d = binio::read_pod<std::uint64_t>(is);
    if (shape != p.tensor.shape()) throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    auto data = binio::read_vec<float>(is);
    const_cast<Param&>(p).tensor.mutable_data() = std::move(data);
  }
}

void save_adam(std::ostream& os, const Adam& opt) {
  auto& m = const_cast<Adam&>(opt).moments_m();
  auto& v = const_cast<Adam&>(opt).moments_v();
  binio::write_pod<std::int64_t>(os, opt.step_count());
  binio::write_pod<std::uint64_t>(os, m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    binio::write_vec(os, m[i]);
    binio::write_vec(os, v[i]);
  }
}

void load_adam(std::istream& is, Adam& opt) {
  opt.set_step_count(binio::read_pod<std::int64_t>(is));
  const auto n = binio::read_pod<std::uint64_t>(is);
  if (n != opt.moments_m().size()) throw std::runtime_error("checkpoint: optimizer slot count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    opt.moments_m()[i] = binio::read_vec<float>(is);
    opt.moments_v()[i] = binio::read_vec<float>(is);
  }
}

void soft_update_params(const std::vector<Param>& online, const std::vector<Param>& target, double tau) {
  if (online.size() != target.size())
    throw std::invalid_argument("soft_update_params: parameter count mismatch");
  for (std::size_t i = 0; i < online.size(); ++i) {
    const auto& src = online[i].tensor.data();
    auto& dst = const_cast<Param&>(target[i]).tensor.mutable_data();
    if (src.size() != dst.size()) throw std::invalid_argument("soft_update_params: size mismatch");
    for (std::size_t j = 0; j < dst.size(); ++j)
      dst[j] = static_cast<float>(tau * src[j] + (1.0 - tau) * dst[j]);
  }
}

}  // namespace marlbench::algorithms
