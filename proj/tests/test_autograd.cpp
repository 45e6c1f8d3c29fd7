// Copyright 2026 The dietnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dietnet/checkpoint.hpp"
#include "dietnet/errors.hpp"
#include "dietnet/gradcheck.hpp"
#include "dietnet/graph.hpp"
#include "dietnet/ops.hpp"
#include "dietnet/optim.hpp"
#include "test_support.hpp"

using namespace dietnet;
using dietnet::testing::random_tensor;
using dietnet::testing::trainable;

namespace {

// Brute-force direct convolution used as an oracle for the im2col path.
Tensor naive_conv(const Tensor& in, const Tensor& k, const Tensor& b, std::size_t s, std::size_t p) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t O = k.dim(0), KH = k.dim(2), KW = k.dim(3);
  const std::size_t OH = (H + 2 * p - KH) / s + 1, OW = (W + 2 * p - KW) / s + 1;
  Tensor out(Shape{O, OH, OW});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t y = 0; y < OH; ++y)
      for (std::size_t x = 0; x < OW; ++x) {
        double acc = b[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t i = 0; i < KH; ++i)
            for (std::size_t j = 0; j < KW; ++j) {
              const long yy = static_cast<long>(y * s + i) - static_cast<long>(p);
              const long xx = static_cast<long>(x * s + j) - static_cast<long>(p);
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(H) || xx >= static_cast<long>(W)) continue;
              acc += k[((o * C + c) * KH + i) * KW + j] * in.at(c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

// Scalar projection sum(R .* node) with R drawn from `seed`, so every output
// element reaches the loss and repeated builds see the same R.
NodeId project(Graph& g, NodeId node, std::uint64_t seed) {
  const std::size_t n = g.value(node).numel();
  Rng rng(seed);
  NodeId flat = g.reshape(node, Shape{n});
  return g.linear(flat, g.constant(random_tensor({1, n}, rng)), g.constant(Tensor(Shape{1})));
}

}  // namespace

TEST_CASE("conv2d examples") {
  SUBCASE("1x1 identity kernel reproduces the input") {
    Tensor in(Shape{1, 4, 4}, 1.0);
    Tensor k(Shape{1, 1, 1, 1}, 1.0);
    CHECK(ops::conv2d(in, k, Tensor(Shape{1}), 1, 0) == in);
  }
  SUBCASE("3x3 kernel with padding 1 keeps 256x256") {
    Tensor in(Shape{3, 256, 256}, 0.5);
    Tensor k(Shape{4, 3, 3, 3}, 0.1);
    auto out = ops::conv2d(in, k, Tensor(Shape{4}), 1, 1);
    CHECK(out.shape() == Shape{4, 256, 256});
  }
  SUBCASE("all-ones 3x3 kernel sums 1..9 to 45") {
    Tensor in(Shape{1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto out = ops::conv2d(in, Tensor(Shape{1, 1, 3, 3}, 1.0), Tensor(Shape{1}), 1, 0);
    REQUIRE(out.shape() == Shape{1, 1, 1});
    CHECK(out[0] == 45.0);
  }
  SUBCASE("channel mismatch reports both shapes") {
    Tensor in(Shape{2, 4, 4});
    Tensor k(Shape{1, 3, 3, 3});
    try {
      ops::conv2d(in, k, Tensor(Shape{1}), 1, 0);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x4x4]") != std::string::npos);
      CHECK(msg.find("[1x3x3x3]") != std::string::npos);
    }
  }
  SUBCASE("matches a direct-summation oracle") {
    Rng rng(7);
    for (std::size_t s : {1u, 2u}) {
      for (std::size_t p : {0u, 1u, 2u}) {
        auto in = random_tensor({3, 7, 6}, rng);
        auto k = random_tensor({4, 3, 3, 3}, rng);
        auto b = random_tensor({4}, rng);
        auto got = ops::conv2d(in, k, b, s, p);
        auto want = naive_conv(in, k, b, s, p);
        REQUIRE(got.shape() == want.shape());
        for (std::size_t i = 0; i < got.numel(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("maxpool2d examples") {
  CHECK(ops::maxpool2d(Tensor(Shape{1, 8, 8}, 1.0), 2, 2, 0).output.shape() == Shape{1, 4, 4});
  auto constant = ops::maxpool2d(Tensor(Shape{2, 5, 5}, 3.5), 3, 1, 0).output;
  for (double v : constant.data()) CHECK(v == 3.5);
  Tensor in(Shape{1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto r = ops::maxpool2d(in, 3, 1, 0);
  CHECK(r.output.numel() == 1);
  CHECK(r.output[0] == 9.0);
  CHECK_THROWS_AS(ops::maxpool2d(in, 6, 1, 1), DimensionError);
}

TEST_CASE("maxpool gradient routes to the first maximum on ties") {
  Graph g;
  NodeId x = g.variable(Tensor(Shape{1, 2, 2}, 1.0));
  NodeId loss = g.sum(g.maxpool2d(x, 2, 2, 0));
  g.backward(loss);
  CHECK(g.grad(x) == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("pooled shapes follow the floor formula") {
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t pad : {0u, 1u, 2u}) {
      for (std::size_t window : {1u, 2u, 3u, 5u}) {
        for (std::size_t extent : {5u, 6u, 9u}) {
          const std::size_t expected = (extent + 2 * pad - window) / stride + 1;
          Tensor in(Shape{1, extent, extent + 1}, 0.25);
          CHECK(ops::maxpool2d(in, window, stride, pad).output.shape() ==
                Shape{1, expected, (extent + 1 + 2 * pad - window) / stride + 1});
          Tensor k(Shape{2, 1, window, window}, 1.0);
          CHECK(ops::conv2d(in, k, Tensor(Shape{2}), stride, pad).shape() ==
                Shape{2, expected, (extent + 1 + 2 * pad - window) / stride + 1});
        }
      }
    }
  }
}

TEST_CASE("concat_channels") {
  Rng rng(3);
  auto a = random_tensor({1, 3, 4}, rng);
  CHECK(ops::concat_channels(std::vector<Tensor>{a}) == a);

  std::vector<Tensor> parts{Tensor(Shape{64, 2, 2}), Tensor(Shape{128, 2, 2}), Tensor(Shape{32, 2, 2}),
                            Tensor(Shape{32, 2, 2})};
  CHECK(ops::concat_channels(parts).dim(0) == 256);

  auto z = ops::concat_channels(std::vector<Tensor>{Tensor(Shape{1, 2, 3}, 0.0), Tensor(Shape{1, 2, 3}, 1.0)});
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(z[i] == 0.0);
    CHECK(z[6 + i] == 1.0);
  }

  try {
    ops::concat_channels(std::vector<Tensor>{Tensor(Shape{1, 2, 3}), Tensor(Shape{1, 2, 3}), Tensor(Shape{1, 3, 3})});
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("input 2") != std::string::npos);
  }

  SUBCASE("slicing recovers every input") {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Tensor> ins;
      const std::size_t n = 1 + rng.index(4);
      for (std::size_t i = 0; i < n; ++i) ins.push_back(random_tensor({1 + rng.index(5), 3, 2}, rng));
      auto cat = ops::concat_channels(ins);
      std::size_t offset = 0;
      for (const auto& t : ins) {
        CHECK(ops::slice_channels(cat, offset, t.dim(0)) == t);
        offset += t.dim(0);
      }
    }
  }
}

TEST_CASE("linear and relu") {
  Tensor x = Tensor::vector({1.5, -2.0, 3.0});
  Tensor eye(Shape{3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(ops::linear(x, eye, Tensor(Shape{3})) == x);
  Tensor b = Tensor::vector({0.5, -1, 2});
  CHECK(ops::linear(x, Tensor(Shape{3, 3}), b) == b);
  CHECK(ops::linear(Tensor::vector({1, 2}), Tensor(Shape{1, 2}, {3, 4}), Tensor::vector({1}))[0] == 12.0);
  CHECK_THROWS_AS(ops::linear(Tensor::vector({1, 2}), Tensor(Shape{1, 3}), Tensor::vector({1})), DimensionError);

  CHECK(ops::relu(Tensor::vector({-1, -2})) == Tensor::vector({0, 0}));
  CHECK(ops::relu(Tensor::vector({1, 2})) == Tensor::vector({1, 2}));
  CHECK(ops::relu(Tensor::vector({-1, 0, 2})) == Tensor::vector({0, 0, 2}));
}

TEST_CASE("softmax cross entropy") {
  for (std::size_t k : {2u, 5u, 10u}) {
    CHECK(ops::softmax_cross_entropy(Tensor(Shape{k}, 0.7), 1) == doctest::Approx(std::log(static_cast<double>(k))));
  }
  CHECK(ops::softmax_cross_entropy(Tensor::vector({100, 0, 0}), 0) < 1e-6);
  CHECK(ops::softmax_cross_entropy(Tensor::vector({1, 2}), 0) == doctest::Approx(std::log(1 + std::exp(1.0))));
  CHECK(ops::softmax_cross_entropy(Tensor::vector({1, 2}), 0) == doctest::Approx(1.3133).epsilon(1e-4));
  CHECK_THROWS_AS(ops::softmax_cross_entropy(Tensor::vector({1, 2}), 2), IndexError);

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    auto logits = random_tensor({6}, rng, -5, 5);
    const double c = rng.uniform(-50, 50);
    Tensor shifted = logits;
    for (auto& v : shifted.data()) v += c;
    const std::size_t t = rng.index(6);
    CHECK(std::abs(ops::softmax_cross_entropy(shifted, t) - ops::softmax_cross_entropy(logits, t)) < 1e-9);
  }
}

TEST_CASE("backward basics") {
  Rng rng(5);
  SUBCASE("sum gives all-ones gradient") {
    Graph g;
    NodeId x = g.variable(random_tensor({2, 3}, rng));
    g.backward(g.sum(x));
    for (double v : g.grad(x)) CHECK(v == 1.0);
  }
  SUBCASE("constant loss gives zero gradient") {
    Graph g;
    NodeId x = g.variable(random_tensor({4}, rng));
    NodeId c = g.constant(Tensor::scalar(2.0));
    g.backward(c);
    for (double v : g.grad(x)) CHECK(v == 0.0);
  }
  SUBCASE("unreachable parameters receive zero") {
    std::vector<NamedParameter> params{{"used", trainable(random_tensor({3}, rng))},
                                       {"unused", trainable(random_tensor({2}, rng))}};
    Graph g;
    NodeId loss = g.sum(g.parameter(params[0].tensor, 0));
    g.backward(loss);
    g.accumulate_into(params);
    REQUIRE(params[1].tensor.has_grad());
    for (double v : params[1].tensor.grad()) CHECK(v == 0.0);
    for (double v : params[0].tensor.grad()) CHECK(v == 1.0);
  }
  SUBCASE("non-scalar loss is rejected") {
    Graph g;
    NodeId x = g.variable(random_tensor({3}, rng));
    CHECK_THROWS_AS(g.backward(x), ContractError);
  }
  SUBCASE("tape order: inputs precede their node") {
    Graph g;
    NodeId x = g.variable(random_tensor({1, 4, 4}, rng));
    NodeId y = g.relu(g.maxpool2d(x, 2, 2, 0));
    NodeId loss = g.sum(y);
    for (NodeId id = 0; id < g.size(); ++id)
      for (auto in : g.inputs(id)) CHECK(in < id);
    CHECK(g.kind(loss) == OpKind::sum);
  }
}

TEST_CASE("backward is bitwise deterministic") {
  Rng rng(9);
  auto in = random_tensor({2, 6, 6}, rng);
  auto k = random_tensor({3, 2, 3, 3}, rng);
  auto run = [&] {
    Graph g;
    NodeId x = g.variable(in);
    NodeId kk = g.variable(k);
    NodeId y = g.relu(g.conv2d(x, kk, g.constant(Tensor(Shape{3})), 1, 1));
    NodeId loss = g.softmax_cross_entropy(g.global_avg_pool(y), 1);
    g.backward(loss);
    return std::make_pair(g.grad(x), g.grad(kk));
  };
  CHECK(run() == run());
}

TEST_CASE("finite-difference agreement for every differentiable op") {
  Rng rng(2024);
  GradCheckOptions opts;
  auto check = [&](std::vector<NamedParameter>& params, const std::function<NodeId(Graph&)>& build) {
    auto report = check_gradients(params, build, opts);
    INFO(report.worst);
    CHECK(report.passed(opts.tolerance));
    CHECK(report.checked > 0);
  };
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t s = 1 + rng.index(2), p = rng.index(2);
    {
      std::vector<NamedParameter> params{{"x", trainable(random_tensor({2, 5, 5}, rng))},
                                         {"k", trainable(random_tensor({3, 2, 3, 3}, rng))},
                                         {"b", trainable(random_tensor({3}, rng))}};
      const std::uint64_t seed = rng.next();
      check(params, [&](Graph& g) {
        NodeId y = g.conv2d(g.parameter(params[0].tensor, 0), g.parameter(params[1].tensor, 1),
                            g.parameter(params[2].tensor, 2), s, p);
        return project(g, y, seed);
      });
    }
    {
      std::vector<NamedParameter> params{{"x", trainable(random_tensor({2, 6, 6}, rng))}};
      const std::uint64_t seed = rng.next();
      check(params, [&](Graph& g) {
        NodeId y = g.maxpool2d(g.parameter(params[0].tensor, 0), 2, 2, 0);
        return project(g, y, seed);
      });
    }
    {
      std::vector<NamedParameter> params{{"a", trainable(random_tensor({1, 2, 2}, rng))},
                                         {"b", trainable(random_tensor({2, 2, 2}, rng))}};
      const std::uint64_t seed = rng.next();
      check(params, [&](Graph& g) {
        std::array<NodeId, 2> ids{g.parameter(params[0].tensor, 0), g.parameter(params[1].tensor, 1)};
        return project(g, g.concat_channels(ids), seed);
      });
    }
    {
      std::vector<NamedParameter> params{{"x", trainable(random_tensor({4}, rng))},
                                         {"w", trainable(random_tensor({3, 4}, rng))},
                                         {"b", trainable(random_tensor({3}, rng))}};
      const std::size_t t = rng.index(3);
      check(params, [&](Graph& g) {
        NodeId y = g.linear(g.parameter(params[0].tensor, 0), g.parameter(params[1].tensor, 1),
                            g.parameter(params[2].tensor, 2));
        return g.softmax_cross_entropy(y, t);
      });
    }
    {
      std::vector<NamedParameter> params{{"a", trainable(random_tensor({3, 4}, rng))},
                                         {"b", trainable(random_tensor({4, 2}, rng))}};
      check(params, [&](Graph& g) {
        NodeId y = g.matmul(g.parameter(params[0].tensor, 0), g.parameter(params[1].tensor, 1));
        return g.mse(y, g.constant(Tensor(Shape{3, 2}, 0.3)));
      });
    }
    {
      std::vector<NamedParameter> params{{"x", trainable(random_tensor({2, 3, 3}, rng))}};
      const std::uint64_t seed = rng.next();
      check(params, [&](Graph& g) {
        NodeId x = g.parameter(params[0].tensor, 0);
        NodeId y = g.add(g.relu(x), g.scale(g.exp(x), 0.5));
        return g.add(project(g, y, seed), g.add(g.mean(x), g.sum(g.global_avg_pool(x))));
      });
    }
    {
      std::vector<NamedParameter> params{{"a", trainable(random_tensor({3, 5}, rng))},
                                         {"log_theta", trainable(random_tensor({3}, rng, -2.0, -0.5))}};
      const std::uint64_t seed = rng.next();
      check(params, [&](Graph& g) {
        NodeId theta = g.exp(g.parameter(params[1].tensor, 1));
        return project(g, g.soft_threshold(g.parameter(params[0].tensor, 0), theta), seed);
      });
    }
  }
}

TEST_CASE("sgd_step") {
  auto make = [](double value, double grad) {
    NamedParameter p{"w", trainable(Tensor::vector({value}))};
    p.tensor.ensure_grad()[0] = grad;
    return p;
  };
  SUBCASE("zero learning rate leaves parameters alone") {
    std::vector<NamedParameter> ps{make(1.25, 3.0)};
    SgdState st;
    sgd_step(ps, 0.0, 0.9, st);
    CHECK(ps[0].tensor[0] == 1.25);
  }
  SUBCASE("lr 1, no momentum subtracts the gradient") {
    std::vector<NamedParameter> ps{make(1.0, 0.375)};
    SgdState st;
    sgd_step(ps, 1.0, 0.0, st);
    CHECK(ps[0].tensor[0] == 1.0 - 0.375);
  }
  SUBCASE("momentum recurrence -0.1 then -0.29") {
    std::vector<NamedParameter> ps{make(0.0, 1.0)};
    SgdState st;
    sgd_step(ps, 0.1, 0.9, st);
    CHECK(ps[0].tensor[0] == doctest::Approx(-0.1).epsilon(1e-15));
    sgd_step(ps, 0.1, 0.9, st);
    CHECK(ps[0].tensor[0] == doctest::Approx(-0.29).epsilon(1e-15));
  }
  SUBCASE("missing gradient names the parameter") {
    std::vector<NamedParameter> ps{{"conv1.weight", trainable(Tensor::vector({1.0}))}};
    SgdState st;
    try {
      sgd_step(ps, 0.1, 0.0, st);
      FAIL("expected ContractError");
    } catch (const ContractError& e) {
      CHECK(std::string(e.what()).find("conv1.weight") != std::string::npos);
    }
  }
  SUBCASE("frozen parameters do not move") {
    std::vector<NamedParameter> ps{make(2.0, 1.0)};
    ps[0].tensor.set_requires_grad(false);
    SgdState st;
    sgd_step(ps, 0.5, 0.0, st);
    CHECK(ps[0].tensor[0] == 2.0);
  }
}

TEST_CASE("checkpoint format") {
  Rng rng(1);
  std::vector<NamedParameter> params{{"conv.weight", random_tensor({2, 1, 3, 3}, rng)},
                                     {"fc.bias", random_tensor({5}, rng)}};
  auto bytes = encode_checkpoint(params);
  REQUIRE(bytes.size() > 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DNT1");
  CHECK(bytes[4] == 2);  // little-endian tensor count
  for (int i = 5; i < 12; ++i) CHECK(bytes[static_cast<std::size_t>(i)] == 0);

  auto decoded = decode_checkpoint(bytes);
  REQUIRE(decoded.size() == 2);
  CHECK(decoded[0].name == "conv.weight");
  CHECK(decoded[0].tensor.shape() == Shape{2, 1, 3, 3});
  CHECK(encode_checkpoint(decoded) == bytes);
  for (std::size_t i = 0; i < 5; ++i) CHECK(decoded[1].tensor[i] == static_cast<double>(static_cast<float>(params[1].tensor[i])));

  const auto path = std::filesystem::temp_directory_path() / "dietnet_ckpt_test.bin";
  save_checkpoint(path, decoded);
  auto reloaded = load_checkpoint(path);
  CHECK(encode_checkpoint(reloaded) == bytes);
  std::filesystem::remove(path);

  bytes.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(bytes), ValidationError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/x.bin"), IoError);
}
