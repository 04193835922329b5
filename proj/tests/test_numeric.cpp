#include <doctest.h>

#include <cmath>

#include "marlbench/numeric/optim.hpp"
#include "marlbench/numeric/rng.hpp"
#include "marlbench/numeric/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace marlbench::num;

TEST_CASE("matmul against identity") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor out = matmul(a, eye);
  CHECK(out.data() == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("softmax of a constant row is uniform") {
  Tensor x({3}, {0, 0, 0});
  Tensor y = x.softmax_last();
  for (float v : y.data()) CHECK(v == doctest::Approx(1.0f / 3.0f));
}

TEST_CASE("sum along axis 1 of ones(2,3)") {
  Tensor x = Tensor::ones({2, 3});
  Tensor s = x.sum(1);
  CHECK(s.shape() == Shape{2});
  CHECK(s.data() == std::vector<float>{3, 3});
}

TEST_CASE("broadcasting follows trailing alignment with extent-1 expansion") {
  Tensor a = Tensor::ones({2, 3});
  Tensor b({3}, {1, 2, 3});
  Tensor c = a + b;
  CHECK(c.shape() == Shape{2, 3});
  CHECK(c.data() == std::vector<float>{2, 3, 4, 2, 3, 4});
  Tensor bad({2}, {1, 2});
  CHECK_THROWS_WITH_AS((void)(a + bad), doctest::Contains("add"), std::invalid_argument);
}

TEST_CASE("shape errors name the op and both shapes") {
  Tensor a = Tensor::ones({2, 3});
  Tensor b = Tensor::ones({4, 2});
  CHECK_THROWS_WITH_AS((void)matmul(a, b), doctest::Contains("[2, 3]"), std::invalid_argument);
}

TEST_CASE("backward of x*x at x=3 gives 6") {
  Tensor x = Tensor::scalar(3.0f);
  x.set_requires_grad(true);
  Tensor loss = x * x;
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(6.0f));
}

TEST_CASE("backward of sum(W v) with v of ones fills rows with ones") {
  Tensor w({3, 2}, {1, 2, 3, 4, 5, 6});
  w.set_requires_grad(true);
  Tensor v({2, 1}, {1, 1});
  Tensor loss = matmul(w, v).sum_all();
  loss.backward();
  CHECK(w.grad() == std::vector<float>(6, 1.0f));
}

TEST_CASE("grads accumulate additively across reuse of a leaf") {
  Tensor x = Tensor::scalar(2.0f);
  x.set_requires_grad(true);
  Tensor loss = x * x + x;  // d/dx = 2x + 1 = 5
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(5.0f));
}

TEST_CASE("backward rejects non-scalar loss") {
  Tensor x = Tensor::ones({2});
  x.set_requires_grad(true);
  Tensor y = x * 2.0f;
  CHECK_THROWS_AS(y.backward(), std::invalid_argument);
}

TEST_CASE("two-layer net gradient matches central finite differences") {
  RngStream rng(7);
  auto rand_tensor = [&](Shape s) {
    std::vector<double> v(shape_size(s));
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return DTensor(s, v);
  };
  std::vector<DTensor> leaves = {rand_tensor({4, 6}), rand_tensor({1, 6}), rand_tensor({6, 3}),
                                 rand_tensor({1, 3})};
  DTensor input = rand_tensor({5, 4});
  auto forward = [&]() {
    DTensor h = (matmul(input, leaves[0]) + leaves[1]).tanh();
    DTensor out = matmul(h, leaves[2]) + leaves[3];
    return (out * out).mean_all();
  };
  auto res = gradcheck::check_gradients(forward, leaves);
  CHECK(res.checked == 4 * 6 + 6 + 6 * 3 + 3);
  CHECK(res.max_rel_err <= 1e-4);
}

TEST_CASE("100+ random graphs pass the finite-difference oracle") {
  int count = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    auto g = gradcheck::make_random_graph(seed);
    auto res = gradcheck::check_gradients(g.forward, g.leaves);
    worst = std::max(worst, res.max_rel_err);
    ++count;
  }
  CHECK(count >= 100);
  CHECK(worst <= 1e-4);
}

TEST_CASE("gradient of a broadcast operand is the reduction over broadcast axes") {
  // y = a * b with b broadcast from [3] to [2,3]; d/db = sum over rows of a*g
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({3}, {1, 1, 1});
  b.set_requires_grad(true);
  Tensor loss = (a * b).sum_all();
  loss.backward();
  CHECK(b.grad() == std::vector<float>{5, 7, 9});

  // scalar broadcast: gradient is the full reduction
  Tensor s = Tensor::scalar(2.0f);
  s.set_requires_grad(true);
  Tensor loss2 = (a * s).sum_all();
  loss2.backward();
  CHECK(s.grad()[0] == doctest::Approx(21.0f));
}

TEST_CASE("identical op sequences produce bit-identical outputs") {
  auto run = [] {
    RngStream rng(99);
    std::vector<float> vals(24);
    for (auto& v : vals) v = static_cast<float>(rng.uniform(-1, 1));
    Tensor x({4, 6}, vals);
    Tensor w({6, 5}, std::vector<float>(30, 0.1f));
    Tensor y = matmul(x.tanh(), w).softmax_last().sum(0);
    return y.data();
  };
  CHECK(run() == run());
}

TEST_CASE("gather picks along an axis and routes gradient back") {
  Tensor q({2, 3}, {1, 2, 3, 4, 5, 6});
  q.set_requires_grad(true);
  Tensor picked = gather(q, 1, {2, 0});
  CHECK(picked.data() == std::vector<float>{3, 4});
  picked.sum_all().backward();
  CHECK(q.grad() == std::vector<float>{0, 0, 1, 1, 0, 0});
}

TEST_CASE("concat, stack and slice round out the shape ops") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {9, 9});
  Tensor c = concat<float>({a, b}, 1);
  CHECK(c.shape() == Shape{2, 3});
  CHECK(c.data() == std::vector<float>{1, 2, 9, 3, 4, 9});

  Tensor st = stack<float>({a, a}, 0);
  CHECK(st.shape() == Shape{2, 2, 2});

  Tensor sl = c.slice(1, 0, 2);
  CHECK(sl.data() == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("max reduction breaks ties toward the lowest index") {
  Tensor x({1, 3}, {5, 5, 2});
  x.set_requires_grad(true);
  Tensor m = x.max(1);
  CHECK(m.data()[0] == 5);
  m.sum_all().backward();
  CHECK(x.grad() == std::vector<float>{1, 0, 0});
}

TEST_CASE("adam first step moves by about -lr for unit gradient") {
  Tensor p = Tensor::scalar(1.0f);
  p.set_requires_grad(true);
  Adam opt({{"p", p}}, /*lr=*/0.1);
  p.mutable_grad()[0] = 1.0f;
  opt.step();
  CHECK(p.data()[0] == doctest::Approx(1.0f - 0.1f).epsilon(1e-5));
}

TEST_CASE("adam with zero gradient leaves a fresh parameter unchanged") {
  Tensor p = Tensor::scalar(0.5f);
  p.set_requires_grad(true);
  Adam opt({{"p", p}}, 0.1);
  p.mutable_grad()[0] = 0.0f;
  opt.step();
  CHECK(p.data()[0] == 0.5f);
}

TEST_CASE("adam momentum keeps moving after the gradient goes quiet") {
  Tensor p = Tensor::scalar(0.0f);
  p.set_requires_grad(true);
  Adam opt({{"p", p}}, 0.1);
  p.mutable_grad()[0] = 1.0f;
  opt.step();
  const float after_one = p.data()[0];
  p.mutable_grad()[0] = 0.0f;
  opt.step();
  const float after_two = p.data()[0];
  opt.step();
  const float after_three = p.data()[0];
  CHECK(after_two < after_one);  // m decays geometrically, still negative drift
  CHECK(after_three < after_two);
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
  Tensor p = Tensor::scalar(0.0f);
  p.set_requires_grad(true);
  Adam opt({{"actor.w0", p}}, 0.1);
  p.mutable_grad()[0] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("actor.w0"), std::invalid_argument);
}

TEST_CASE("clip_grad_norm scales only when the norm exceeds the bound") {
  Tensor p = Tensor::zeros({2});
  p.set_requires_grad(true);
  std::vector<Param> params = {{"p", p}};

  p.mutable_grad() = {6.0f, 8.0f};  // norm 10
  CHECK(clip_grad_norm(params, 5.0) == doctest::Approx(0.5));
  CHECK(p.grad()[0] == doctest::Approx(3.0f));

  p.mutable_grad() = {0.6f, 0.8f};  // norm 1
  CHECK(clip_grad_norm(params, 5.0) == doctest::Approx(1.0));

  p.mutable_grad() = {0.0f, 0.0f};
  CHECK(clip_grad_norm(params, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("rng streams derived from the same seed and name coincide") {
  RngStream a = derive_stream(42, "collection");
  RngStream b = derive_stream(42, "collection");
  CHECK(a.next_u64() == b.next_u64());
  RngStream c = derive_stream(42, "evaluation");
  RngStream d = derive_stream(43, "collection");
  RngStream e = derive_stream(42, "collection");
  auto first = e.next_u64();
  CHECK(first != c.next_u64());
  CHECK(first != d.next_u64());
}

TEST_CASE("rng serialization round-trips the stream state") {
  RngStream a(123);
  a.uniform();
  a.normal();
  RngStream b;
  b.deserialize(a.serialize());
  CHECK(a.next_u64() == b.next_u64());
}
