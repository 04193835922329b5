#include <doctest.h>

#include <cmath>

#include "marlbench/models/model.hpp"
#include "marlbench/numeric/rng.hpp"

using namespace marlbench;
using envs::DomainSpec;
using models::Activation;
using models::InstMode;
using models::ModelConfig;
using models::ModelKind;
using num::RngStream;
using num::Shape;
using num::Tensor;

namespace {

ModelConfig mlp_config(std::vector<int> widths = {8, 8}) {
  ModelConfig cfg;
  cfg.kind = ModelKind::Mlp;
  cfg.layer_widths = std::move(widths);
  cfg.activation = Activation::Tanh;
  return cfg;
}

ModelConfig deepsets_config() {
  ModelConfig cfg;
  cfg.kind = ModelKind::DeepSets;
  cfg.phi_widths = {8};
  cfg.rho_widths = {8};
  return cfg;
}

Tensor random_input(Shape shape, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<float> vals(num::shape_size(shape));
  for (auto& v : vals) v = static_cast<float>(rng.uniform(-1, 1));
  return Tensor(std::move(shape), std::move(vals));
}

DomainSpec vec_spec(int d) { return DomainSpec::continuous({d}, -10.0, 10.0); }

}  // namespace

TEST_CASE("non-shared decentralized instantiation stacks independent parameters") {
  RngStream rng(1);
  auto model = models::instantiate(mlp_config(), InstMode::Decentralized, 3, /*share=*/false, vec_spec(4),
                                   vec_spec(2), rng);
  CHECK(model->parameter_stacks() == 3);
  for (const auto& p : model->parameters()) CHECK(p.tensor.shape()[0] == 3);

  auto shared =
      models::instantiate(mlp_config(), InstMode::Decentralized, 3, true, vec_spec(4), vec_spec(2), rng);
  CHECK(shared->parameter_stacks() == 1);

  // sharing off: 4 agents cost exactly 4x the shared parameter count
  RngStream rng2(2);
  auto m1 = models::instantiate(mlp_config(), InstMode::Decentralized, 4, true, vec_spec(4), vec_spec(2), rng2);
  auto m4 = models::instantiate(mlp_config(), InstMode::Decentralized, 4, false, vec_spec(4), vec_spec(2), rng2);
  std::size_t n1 = 0, n4 = 0;
  for (const auto& p : m1->parameters()) n1 += p.tensor.size();
  for (const auto& p : m4->parameters()) n4 += p.tensor.size();
  CHECK(n4 == 4 * n1);
}

TEST_CASE("weight sharing maps identical rows to identical outputs") {
  RngStream rng(7);
  auto model =
      models::instantiate(mlp_config(), InstMode::Decentralized, 3, true, vec_spec(4), vec_spec(2), rng);
  std::vector<float> row = {0.3f, -0.2f, 0.9f, 0.1f};
  std::vector<float> data;
  for (int i = 0; i < 3; ++i) data.insert(data.end(), row.begin(), row.end());
  Tensor out = model->forward(Tensor({1, 3, 4}, data));
  for (int i = 0; i < 2; ++i)
    for (int d = 0; d < 2; ++d) CHECK(out.data()[i * 2 + d] == out.data()[(i + 1) * 2 + d]);
}

TEST_CASE("deepsets centralized-local output is invariant to agent permutation") {
  RngStream rng(3);
  auto model = models::instantiate(deepsets_config(), InstMode::CentralizedLocal, 3, true, vec_spec(4),
                                   vec_spec(2), rng);
  Tensor x = random_input({2, 3, 4}, 11);
  Tensor out = model->forward(x);
  CHECK(out.shape() == Shape{2, 2});

  std::vector<float> rotated(x.size());
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 4; ++d)
        rotated[(b * 3 + i) * 4 + d] = x.data()[(b * 3 + (i + 1) % 3) * 4 + d];
  Tensor out2 = model->forward(Tensor({2, 3, 4}, rotated));
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == out2.data()[i]);
}

TEST_CASE("deepsets rejects centralized-global instantiation") {
  RngStream rng(5);
  CHECK_THROWS_WITH_AS((void)models::instantiate(deepsets_config(), InstMode::CentralizedGlobal, 3, true,
                                                 vec_spec(4), vec_spec(2), rng),
                       doctest::Contains("centralized_global"), std::invalid_argument);
}

TEST_CASE("zero final layer produces zero outputs of the right shape") {
  RngStream rng(9);
  auto model =
      models::instantiate(mlp_config(), InstMode::Decentralized, 2, true, vec_spec(3), vec_spec(5), rng);
  for (auto& p : model->parameters())
    if (p.name == "w2" || p.name == "b2")
      for (auto& v : p.tensor.mutable_data()) v = 0.0f;
  Tensor out = model->forward(random_input({4, 2, 3}, 21));
  CHECK(out.shape() == Shape{4, 2, 5});
  for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("perturbing one agent's stack changes only that agent's output") {
  RngStream rng(13);
  auto model =
      models::instantiate(mlp_config(), InstMode::Decentralized, 3, false, vec_spec(4), vec_spec(2), rng);
  Tensor x = random_input({2, 3, 4}, 31);
  const std::vector<float> before = model->forward(x).data();
  auto params = model->parameters();
  auto& w0 = params[0].tensor;  // [3, d_in, w]
  const std::size_t stack_size = w0.size() / 3;
  for (std::size_t i = 0; i < stack_size; ++i) w0.mutable_data()[i] += 0.25f;
  const std::vector<float> after = model->forward(x).data();
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i) {
      bool changed = false;
      for (int d = 0; d < 2; ++d)
        if (before[(b * 3 + i) * 2 + d] != after[(b * 3 + i) * 2 + d]) changed = true;
      CHECK(changed == (i == 0));
    }
}

TEST_CASE("centralized-local mlp equals a flat mlp on the concatenation") {
  RngStream rng(17);
  auto central = models::instantiate(mlp_config({6}), InstMode::CentralizedLocal, 2, true, vec_spec(2),
                                     vec_spec(3), rng);
  RngStream rng2(17);  // same draws -> identical weights on the 4-dim flat input
  auto flat = models::instantiate(mlp_config({6}), InstMode::CentralizedGlobal, 1, true, vec_spec(4),
                                  vec_spec(3), rng2);
  Tensor x = random_input({5, 2, 2}, 41);
  Tensor a = central->forward(x);
  Tensor b = flat->forward(x.reshape({5, 4}));
  REQUIRE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]));
}

TEST_CASE("chain of one model is that model") {
  RngStream rng(19);
  auto m = models::instantiate(mlp_config(), InstMode::Decentralized, 2, true, vec_spec(3), vec_spec(2), rng);
  auto c = models::chain({m});
  CHECK(c.get() == m.get());
}

TEST_CASE("chained forward composes stage forwards") {
  RngStream rng(23);
  auto a = models::instantiate(mlp_config({4}), InstMode::Decentralized, 2, true, vec_spec(3), vec_spec(4), rng);
  auto b = models::instantiate(mlp_config({4}), InstMode::Decentralized, 2, true, vec_spec(4), vec_spec(2), rng);
  auto c = models::chain({a, b});
  Tensor x = random_input({3, 2, 3}, 51);
  Tensor direct = b->forward(a->forward(x));
  Tensor chained = c->forward(x);
  REQUIRE(direct.shape() == chained.shape());
  for (std::size_t i = 0; i < direct.size(); ++i) CHECK(direct.data()[i] == chained.data()[i]);
}

TEST_CASE("decentralized-then-centralized chain maps [B,n,d] to [B,d_out]") {
  RngStream rng(29);
  auto enc = models::instantiate(mlp_config({6}), InstMode::Decentralized, 3, true, vec_spec(4), vec_spec(5), rng);
  auto head = models::instantiate(mlp_config({6}), InstMode::CentralizedLocal, 3, true, vec_spec(5),
                                  vec_spec(2), rng);
  auto c = models::chain({enc, head});
  CHECK(c->mode() == InstMode::CentralizedLocal);
  Tensor out = c->forward(random_input({4, 3, 4}, 61));
  CHECK(out.shape() == Shape{4, 2});
}

TEST_CASE("chain rejects spec mismatches naming the junction") {
  RngStream rng(31);
  auto a = models::instantiate(mlp_config(), InstMode::Decentralized, 2, true, vec_spec(3), vec_spec(4), rng);
  auto b = models::instantiate(mlp_config(), InstMode::Decentralized, 2, true, vec_spec(5), vec_spec(2), rng);
  CHECK_THROWS_WITH_AS((void)models::chain({a, b}), doctest::Contains("junction 0->1"),
                       std::invalid_argument);
  auto central = models::instantiate(mlp_config(), InstMode::CentralizedLocal, 2, true, vec_spec(3),
                                     vec_spec(5), rng);
  auto dec = models::instantiate(mlp_config(), InstMode::Decentralized, 2, true, vec_spec(5), vec_spec(2), rng);
  CHECK_THROWS_WITH_AS((void)models::chain({central, dec}), doctest::Contains("mode transition"),
                       std::invalid_argument);
}

TEST_CASE("shape contracts hold across modes and sharing flags") {
  RngStream shape_rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(shape_rng.uniform_int(4));
    const int d_in = 1 + static_cast<int>(shape_rng.uniform_int(6));
    const int d_out = 1 + static_cast<int>(shape_rng.uniform_int(5));
    const int B = 1 + static_cast<int>(shape_rng.uniform_int(4));
    const bool share = shape_rng.uniform() < 0.5;
    const bool deepsets = shape_rng.uniform() < 0.5;
    ModelConfig cfg = deepsets ? deepsets_config() : mlp_config();
    const int mode_pick = static_cast<int>(shape_rng.uniform_int(deepsets ? 2 : 3));
    RngStream rng(100 + trial);
    const auto us = [](int v) { return static_cast<std::size_t>(v); };
    if (mode_pick == 0) {
      auto m = models::instantiate(cfg, InstMode::Decentralized, n, share, vec_spec(d_in), vec_spec(d_out), rng);
      auto out = m->forward(random_input({us(B), us(n), us(d_in)}, trial));
      CHECK(out.shape() == Shape{us(B), us(n), us(d_out)});
    } else if (mode_pick == 1) {
      auto m = models::instantiate(cfg, InstMode::CentralizedLocal, n, share, vec_spec(d_in), vec_spec(d_out), rng);
      auto out = m->forward(random_input({us(B), us(n), us(d_in)}, trial));
      CHECK(out.shape() == Shape{us(B), us(d_out)});
    } else {
      auto m = models::instantiate(cfg, InstMode::CentralizedGlobal, n, share, vec_spec(d_in), vec_spec(d_out), rng);
      auto out = m->forward(random_input({us(B), us(d_in)}, trial));
      CHECK(out.shape() == Shape{us(B), us(d_out)});
    }
  }
}

TEST_CASE("forward rejects inputs naming expected and received shapes") {
  RngStream rng(37);
  auto m = models::instantiate(mlp_config(), InstMode::Decentralized, 3, true, vec_spec(4), vec_spec(2), rng);
  CHECK_THROWS_WITH_AS((void)m->forward(random_input({2, 5}, 1)),
                       doctest::Contains("expected input [B, 3, 4]"), std::invalid_argument);
}

TEST_CASE("gradients reach every parameter stack") {
  RngStream rng(41);
  auto m = models::instantiate(mlp_config({6}), InstMode::Decentralized, 3, false, vec_spec(4), vec_spec(2), rng);
  Tensor x = random_input({4, 3, 4}, 91);
  Tensor out = m->forward(x);
  Tensor loss = (out * out).sum_all();
  loss.backward();
  for (const auto& p : m->parameters()) {
    REQUIRE(p.tensor.has_grad());
    double norm = 0.0;
    for (float g : p.tensor.grad()) norm += std::abs(g);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("soft update interpolates and copy duplicates") {
  RngStream rng(43);
  auto online = models::instantiate(mlp_config(), InstMode::Decentralized, 2, true, vec_spec(3), vec_spec(2), rng);
  auto target = models::instantiate(mlp_config(), InstMode::Decentralized, 2, true, vec_spec(3), vec_spec(2), rng);
  models::copy_parameters(*online, *target);
  auto op = online->parameters();
  auto tp = target->parameters();
  for (std::size_t i = 0; i < op.size(); ++i) CHECK(op[i].tensor.data() == tp[i].tensor.data());

  for (auto& p : online->parameters())
    for (auto& v : p.tensor.mutable_data()) v += 1.0f;
  models::soft_update(*online, *target, 0.5);
  op = online->parameters();
  tp = target->parameters();
  for (std::size_t i = 0; i < op.size(); ++i)
    for (std::size_t j = 0; j < op[i].tensor.size(); ++j)
      CHECK(tp[i].tensor.data()[j] == doctest::Approx(op[i].tensor.data()[j] - 0.5f));
}
