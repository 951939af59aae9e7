// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "common/error.hpp"
#include "nn/adam.hpp"
#include "nn/checkpoint.hpp"
#include "nn/init.hpp"
#include "nn/ops.hpp"
#include "nn/tape.hpp"
#include "oracles.hpp"

using namespace avseci;
using namespace avseci::nn;
using testing::gradcheck;
using testing::random_tensor;

namespace {

// Reduces any var to a scalar through a fixed random projection so every
// output entry carries a distinct upstream gradient.
Var project(Tape& t, Var y, std::uint64_t seed = 99) {
  Tensor target = random_tensor(y.shape(), seed);
  return mse(y, t.constant(target));
}

std::vector<double> run(Tape& t, Var v) {
  (void)t;
  return {v.value().begin(), v.value().end()};
}

}  // namespace

TEST_CASE("dense forward cases") {
  Tape t;
  Var x = t.constant(Tensor({1, 2}, {1.0, 2.0}));
  Var W = t.constant(Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}));
  Var b = t.constant(Tensor({2}, {1.0, 1.0}));
  CHECK(run(t, dense(x, W, b)) == std::vector<double>{2.0, 3.0});
  Tensor xi = random_tensor({3, 4}, 1);
  Tensor eye({4, 4});
  for (int i = 0; i < 4; ++i) eye[static_cast<std::size_t>(i * 5)] = 1.0;
  CHECK(run(t, dense(t.constant(xi), t.constant(eye), t.constant(Tensor({4})))) == std::vector<double>(xi.values.begin(), xi.values.end()));
  CHECK_THROWS_AS(dense(x, t.constant(Tensor({3, 2})), b), ShapeError);
}

TEST_CASE("dense gradient") {
  const double err = gradcheck({random_tensor({3, 4}, 1), random_tensor({4, 2}, 2), random_tensor({2}, 3)},
                               [](Tape& t, const std::vector<Var>& v) {
                                 return project(t, dense(v[0], v[1], v[2]));
                               });
  CHECK(err < 1e-4);
}

TEST_CASE("elementwise op gradients") {
  auto a = random_tensor({4, 5}, 4);
  auto b = random_tensor({4, 5}, 5);
  CHECK(gradcheck({a, b}, [](Tape& t, const std::vector<Var>& v) {
          return project(t, mul(add(v[0], scale(v[1], 0.7)), sub(v[0], v[1])));
        }) < 1e-4);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) { return project(t, sigmoid(v[0])); }) < 1e-4);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) { return project(t, relu(v[0])); }) < 1e-4);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) {
          return project(t, transpose(reshape(v[0], {5, 4})));
        }) < 1e-4);
  CHECK(gradcheck({a, b}, [](Tape&, const std::vector<Var>& v) { return mae(v[0], v[1]); }) < 1e-4);
  CHECK(gradcheck({a, b}, [](Tape& t, const std::vector<Var>& v) { return project(t, magnitude(v[0], v[1])); }) <
        1e-4);
  CHECK(gradcheck({a}, [](Tape& t, const std::vector<Var>& v) { return project(t, crop_cols(v[0], 3)); }) < 1e-4);
}

TEST_CASE("weighted mse") {
  Tape t;
  Tensor w({2, 2}, {1.0, 0.0, 1.0, 0.0});
  Var a = t.constant(Tensor({2, 2}, {1.0, 5.0, 3.0, -7.0}));
  Var b = t.constant(Tensor({2, 2}, {0.0, 0.0, 0.0, 0.0}));
  CHECK(mse(a, b, &w).item() == doctest::Approx(5.0));
  CHECK(mse(a, b).item() == doctest::Approx((1.0 + 25.0 + 9.0 + 49.0) / 4.0));
  auto x = random_tensor({2, 2}, 8);
  CHECK(gradcheck({x}, [&](Tape& tt, const std::vector<Var>& v) {
          return mse(v[0], tt.constant(Tensor({2, 2}, 0.3)), &w);
        }) < 1e-4);
}

TEST_CASE("sigmoid stays finite for large inputs") {
  Tape t;
  Var y = sigmoid(t.constant(Tensor({3}, {-800.0, 0.0, 800.0})));
  CHECK(y.value()[0] == doctest::Approx(0.0));
  CHECK(y.value()[1] == 0.5);
  CHECK(y.value()[2] == doctest::Approx(1.0));
}

TEST_CASE("attention degenerate cases") {
  Tape t;
  Tensor q = random_tensor({3, 4}, 1);
  Tensor k({5, 4}, 0.25);
  Tensor v = random_tensor({5, 2}, 2);
  auto out = attention(t.constant(q), t.constant(k), t.constant(v)).value();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) {
      double mean = 0.0;
      for (int s = 0; s < 5; ++s) mean += v[static_cast<std::size_t>(s * 2 + c)] / 5.0;
      CHECK(out[static_cast<std::size_t>(r * 2 + c)] == doctest::Approx(mean));
    }
  }
  Tensor k1 = random_tensor({1, 4}, 3);
  Tensor v1({1, 2}, {0.3, -0.9});
  auto single = attention(t.constant(q), t.constant(k1), t.constant(v1)).value();
  for (int r = 0; r < 3; ++r) {
    CHECK(single[static_cast<std::size_t>(2 * r)] == doctest::Approx(0.3));
    CHECK(single[static_cast<std::size_t>(2 * r + 1)] == doctest::Approx(-0.9));
  }
}

TEST_CASE("attention 2x2 against direct formula") {
  Tensor q({2, 2}, {1.0, 0.0, 0.5, -1.0});
  Tensor k({2, 2}, {0.2, 0.4, -0.3, 1.0});
  Tensor v({2, 2}, {1.0, 2.0, -1.0, 0.5});
  Tape t;
  auto out = attention(t.constant(q), t.constant(k), t.constant(v)).value();
  for (int i = 0; i < 2; ++i) {
    double s[2];
    for (int j = 0; j < 2; ++j) {
      s[j] = (q[static_cast<std::size_t>(2 * i)] * k[static_cast<std::size_t>(2 * j)] +
              q[static_cast<std::size_t>(2 * i + 1)] * k[static_cast<std::size_t>(2 * j + 1)]) /
             std::sqrt(2.0);
    }
    const double e0 = std::exp(s[0]), e1 = std::exp(s[1]);
    const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
    CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-12));
    for (int c = 0; c < 2; ++c) {
      const double ref = p0 * v[static_cast<std::size_t>(c)] + p1 * v[static_cast<std::size_t>(2 + c)];
      CHECK(out[static_cast<std::size_t>(2 * i + c)] == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention rows are convex combinations and gradients match") {
  Tensor q = random_tensor({4, 3}, 10, -3.0, 3.0);
  Tensor k = random_tensor({6, 3}, 11, -3.0, 3.0);
  Tensor v = random_tensor({6, 2}, 12);
  Tape t;
  auto out = attention(t.constant(q), t.constant(k), t.constant(v)).value();
  for (int c = 0; c < 2; ++c) {
    double lo = 1e9, hi = -1e9;
    for (int s = 0; s < 6; ++s) {
      lo = std::min(lo, v[static_cast<std::size_t>(2 * s + c)]);
      hi = std::max(hi, v[static_cast<std::size_t>(2 * s + c)]);
    }
    for (int r = 0; r < 4; ++r) {
      CHECK(out[static_cast<std::size_t>(2 * r + c)] >= lo - 1e-12);
      CHECK(out[static_cast<std::size_t>(2 * r + c)] <= hi + 1e-12);
    }
  }
  Tensor bias = random_tensor({4, 6}, 13, -2.0, 0.0);
  CHECK(gradcheck({q, k, v}, [](Tape& tt, const std::vector<Var>& x) {
          return project(tt, attention(x[0], x[1], x[2]));
        }) < 1e-4);
  CHECK(gradcheck({q, k, v}, [&](Tape& tt, const std::vector<Var>& x) {
          return project(tt, attention(x[0], x[1], x[2], &bias));
        }) < 1e-4);
}

TEST_CASE("topk_mask forward, backward and oracle") {
  Tape t;
  Tensor row({1, 22});
  for (int i = 0; i < 22; ++i) row[static_cast<std::size_t>(i)] = i + 1.0;
  Var x = t.leaf(row);
  Var y = topk_mask(x, 8);
  for (int i = 0; i < 22; ++i) CHECK((y.value()[static_cast<std::size_t>(i)] != 0.0) == (i >= 14));
  Tape t2;
  Tensor batch = random_tensor({1000, 22}, 21, 0.0, 1.0);
  Var bx = t2.leaf(batch);
  Var by = topk_mask(bx, 8);
  Var total = t2.record("sum", {1}, {0.0}, {by}, [by](Tape& tt, const Buffer& g) {
    for (double& v : tt.grad_buffer(by)) v += g[0];
  });
  t2.backward(total);
  const auto gx = t2.grad(bx);
  for (int r = 0; r < 1000; ++r) {
    std::vector<double> vals(batch.values.begin() + r * 22, batch.values.begin() + (r + 1) * 22);
    const auto keep = testing::brute_topk(vals, 8);
    std::vector<bool> kept(22, false);
    for (auto i : keep) kept[i] = true;
    int ones = 0;
    for (int c = 0; c < 22; ++c) {
      const auto idx = static_cast<std::size_t>(r * 22 + c);
      REQUIRE(by.value()[idx] == (kept[static_cast<std::size_t>(c)] ? batch[idx] : 0.0));
      REQUIRE(gx[idx] == (kept[static_cast<std::size_t>(c)] ? 1.0 : 0.0));
      ones += gx[idx] == 1.0;
    }
    REQUIRE(ones == 8);
  }
  // Idempotent and invariant under positive rescaling.
  Var again = topk_mask(by, 8);
  CHECK(again.value() == by.value());
  Var scaled = topk_mask(scale(bx, 4.0), 8);
  for (std::size_t i = 0; i < batch.size(); ++i) REQUIRE((scaled.value()[i] != 0.0) == (by.value()[i] != 0.0));
  CHECK_THROWS_AS(topk_mask(bx, 0), UsageError);
}

TEST_CASE("conv2d cases") {
  Tape t;
  Tensor x = random_tensor({1, 4, 5}, 3);
  Var one = t.constant(Tensor({1, 1, 1, 1}, 1.0));
  CHECK(conv2d(t.constant(x), one, t.constant(Tensor({1})), 1, 0).value() == x.values);
  // Delta at kernel row 0 of a 3x3 kernel reads input row i-1: content moves down one row.
  Tensor delta({1, 1, 3, 3});
  delta[1] = 1.0;
  auto y = conv2d(t.constant(x), t.constant(delta), t.constant(Tensor({1})), 1, 1).value();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double ref = i == 0 ? 0.0 : x[static_cast<std::size_t>((i - 1) * 5 + j)];
      CHECK(y[static_cast<std::size_t>(i * 5 + j)] == ref);
    }
  }
  Var strided = conv2d(t.constant(random_tensor({2, 7, 6}, 1)), t.constant(random_tensor({3, 2, 3, 3}, 2)),
                       t.constant(Tensor({3})), 2, 1);
  CHECK(strided.shape() == Shape{3, 4, 3});
  CHECK_THROWS_AS(conv2d(t.constant(x), t.constant(Tensor({1, 2, 1, 1})), t.constant(Tensor({1})), 1, 0),
                  ShapeError);
}

TEST_CASE("conv2d and upsample gradients") {
  const Tensor x = random_tensor({2, 6, 6}, 31);
  const Tensor w = random_tensor({3, 2, 3, 3}, 32);
  const Tensor b = random_tensor({3}, 33);
  for (int stride : {1, 2}) {
    CHECK(gradcheck({x, w, b}, [stride](Tape& t, const std::vector<Var>& v) {
            return project(t, conv2d(v[0], v[1], v[2], stride, 1));
          }) < 1e-4);
  }
  CHECK(gradcheck({random_tensor({2, 3, 2}, 34)}, [](Tape& t, const std::vector<Var>& v) {
          return project(t, upsample2x(v[0]));
        }) < 1e-4);
}

TEST_CASE("composed graph gradient") {
  const Tensor x = random_tensor({5, 6}, 41);
  const Tensor w1 = random_tensor({6, 8}, 42);
  const Tensor w2 = random_tensor({8, 22}, 43);
  CHECK(gradcheck({x, w1, w2}, [](Tape& t, const std::vector<Var>& v) {
          Var h = relu(dense(v[0], v[1], t.constant(Tensor({8}, 0.05))));
          Var o = sigmoid(dense(h, v[2], t.constant(Tensor({22}))));
          return project(t, topk_mask(o, 8));
        }) < 1e-4);
}

TEST_CASE("parameter gradients accumulate once per backward") {
  Parameter p("p", {2});
  p.value.values = {0.5, -1.0};
  Tape t;
  Var a = t.param(p);
  Var b = t.param(p);
  CHECK(a.id() == b.id());
  Var loss = mse(add(a, b), t.constant(Tensor({2}, 0.0)));
  t.backward(loss);
  // d/dp mean((2p)^2) = 4p
  CHECK(p.grad[0] == doctest::Approx(2.0));
  CHECK(p.grad[1] == doctest::Approx(-4.0));
}

TEST_CASE("non-finite values are rejected") {
  Tape t;
  Var x = t.constant(Tensor({1}, 1.0));
  CHECK_THROWS_AS(t.record("bad", {1}, {std::nan("")}, {x}, nullptr), NumericError);
}

TEST_CASE("adam updates") {
  Parameter p("p", {1});
  p.value[0] = 2.0;
  Adam zero({&p}, {0.1});
  p.grad = {0.0};
  zero.step();
  CHECK(p.value[0] == 2.0);

  Parameter q("q", {1});
  q.value[0] = 0.0;
  Adam opt({&q}, {0.1});
  q.grad = {1.0};
  opt.step();
  // mhat = 1, vhat = 1: step is -lr / (1 + eps)
  CHECK(q.value[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(q.grad[0] == 0.0);

  Parameter r("r", {1});
  Adam bad({&r}, {0.1});
  r.grad = {std::nan("")};
  CHECK_THROWS_AS(bad.step(), NumericError);
}

TEST_CASE("adam deterministic across identical runs") {
  auto train = [] {
    Parameter w("layer.w", {4, 3});
    glorot_uniform(w, 4, 3, 7);
    Adam opt({&w}, {});
    for (int step = 0; step < 20; ++step) {
      Tape t;
      Var y = dense(t.constant(random_tensor({5, 4}, 1)), t.param(w), t.constant(Tensor({3})));
      t.backward(mse(y, t.constant(random_tensor({5, 3}, 2))));
      opt.step();
    }
    return w.value.values;
  };
  CHECK(train() == train());
}

TEST_CASE("glorot init range and seeding") {
  Parameter a("x.w", {30, 20});
  Parameter b("x.w", {30, 20});
  Parameter c("y.w", {30, 20});
  glorot_uniform(a, 30, 20, 5);
  glorot_uniform(b, 30, 20, 5);
  glorot_uniform(c, 30, 20, 5);
  CHECK(a.value.values == b.value.values);
  CHECK(a.value.values != c.value.values);
  const double lim = std::sqrt(6.0 / 50.0);
  for (double v : a.value.values) CHECK(std::abs(v) <= lim);
}

TEST_CASE("checkpoint round trip") {
  auto dir = testing::scratch_dir("ckpt");
  Parameter w("net.dense0.weight", {3, 2});
  glorot_uniform(w, 3, 2, 1);
  Adam opt({&w}, {});
  w.grad = {1, 2, 3, 4, 5, 6};
  opt.step();
  Checkpoint ck;
  ck.kind = "test";
  ck.seed = 9;
  ck.corpus_peak = 3.5;
  ck.config = {{"lr", 0.001}};
  ck.add_parameters({&w});
  ck.add_optimizer(opt);
  ck.save(dir);
  Checkpoint back = Checkpoint::load(dir);
  CHECK(back.kind == "test");
  CHECK(back.seed == 9);
  CHECK(back.corpus_peak == 3.5);
  CHECK(back.config_hash() == ck.config_hash());
  CHECK(back.contains("adam.m/net.dense0.weight"));
  Parameter w2("net.dense0.weight", {3, 2});
  back.restore({&w2});
  for (std::size_t i = 0; i < 6; ++i) CHECK(w2.value[i] == static_cast<double>(static_cast<float>(w.value[i])));
  CHECK(checkpoint_hash(dir) == checkpoint_hash(dir));
  Parameter wrong("net.dense0.weight", {2, 2});
  CHECK_THROWS(back.restore({&wrong}));
}
