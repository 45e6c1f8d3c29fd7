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

#include "dietnet/graph.hpp"

#include <cmath>
#include <fmt/format.h>

#include "dietnet/errors.hpp"
#include "dietnet/ops.hpp"
#include "dietnet/optim.hpp"

namespace dietnet {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::constant: return "constant";
    case OpKind::variable: return "variable";
    case OpKind::parameter: return "parameter";
    case OpKind::conv2d: return "conv2d";
    case OpKind::maxpool2d: return "maxpool2d";
    case OpKind::concat_channels: return "concat_channels";
    case OpKind::linear: return "linear";
    case OpKind::matmul: return "matmul";
    case OpKind::relu: return "relu";
    case OpKind::add: return "add";
    case OpKind::scale: return "scale";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::global_avg_pool: return "global_avg_pool";
    case OpKind::reshape: return "reshape";
    case OpKind::softmax_cross_entropy: return "softmax_cross_entropy";
    case OpKind::soft_threshold: return "soft_threshold";
    case OpKind::exp: return "exp";
    case OpKind::mse: return "mse";
  }
  return "unknown";
}

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size()) throw IndexError(fmt::format("node {} does not exist (graph has {})", id, nodes_.size()));
}

void Graph::mix_signature(std::uint64_t v) {
  signature_ ^= v + 0x9e3779b97f4a7c15ULL + (signature_ << 6) + (signature_ >> 2);
}

NodeId Graph::push(OpKind kind, std::vector<NodeId> inputs, Tensor value,
                   std::function<void(Graph&, NodeId)> backward) {
  Node n;
  n.kind = kind;
  for (auto in : inputs) {
    check_id(in);
    n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  }
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

void Graph::accumulate(NodeId id, std::span<const double> g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad.assign(g.begin(), g.end());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

NodeId Graph::constant(Tensor value) { return push(OpKind::constant, {}, std::move(value), nullptr); }

NodeId Graph::variable(Tensor value) {
  auto id = push(OpKind::variable, {}, std::move(value), nullptr);
  nodes_[id].requires_grad = true;
  return id;
}

NodeId Graph::parameter(const Tensor& value, std::size_t slot) {
  Node n;
  n.kind = OpKind::parameter;
  n.external = &value;
  n.slot = slot;
  n.requires_grad = value.requires_grad();
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

const Tensor& Graph::value(NodeId id) const {
  check_id(id);
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

std::vector<double> Graph::grad(NodeId id) const {
  check_id(id);
  const Node& n = nodes_[id];
  if (n.grad.empty()) return std::vector<double>(value(id).numel(), 0.0);
  return n.grad;
}

bool Graph::requires_grad(NodeId id) const {
  check_id(id);
  return nodes_[id].requires_grad;
}

OpKind Graph::kind(NodeId id) const {
  check_id(id);
  return nodes_[id].kind;
}

std::span<const NodeId> Graph::inputs(NodeId id) const {
  check_id(id);
  return nodes_[id].inputs;
}

NodeId Graph::conv2d(NodeId input, NodeId kernels, NodeId bias, std::size_t stride, std::size_t padding) {
  check_id(input);
  check_id(kernels);
  check_id(bias);
  Tensor out = ops::conv2d(value(input), value(kernels), value(bias), stride, padding);
  return push(OpKind::conv2d, {input, kernels, bias}, std::move(out), [stride, padding](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    const NodeId in = n.inputs[0], k = n.inputs[1], b = n.inputs[2];
    Tensor dout(n.value.shape(), n.grad);
    auto grads = ops::conv2d_backward(g.value(in), g.value(k), dout, stride, padding, g.nodes_[in].requires_grad);
    g.accumulate(in, grads.input.data());
    g.accumulate(k, grads.kernels.data());
    g.accumulate(b, grads.bias.data());
  });
}

NodeId Graph::maxpool2d(NodeId input, std::size_t window, std::size_t stride, std::size_t padding) {
  check_id(input);
  auto r = ops::maxpool2d(value(input), window, stride, padding);
  for (auto a : r.argmax) mix_signature(a);
  return push(OpKind::maxpool2d, {input}, std::move(r.output),
              [argmax = std::move(r.argmax)](Graph& g, NodeId self) {
                const auto& n = g.nodes_[self];
                const NodeId in = n.inputs[0];
                Tensor dout(n.value.shape(), n.grad);
                g.accumulate(in, ops::maxpool2d_backward(g.value(in).shape(), argmax, dout).data());
              });
}

NodeId Graph::concat_channels(std::span<const NodeId> inputs) {
  std::vector<Tensor> values;
  values.reserve(inputs.size());
  for (auto id : inputs) {
    check_id(id);
    values.push_back(value(id));
  }
  Tensor out = ops::concat_channels(values);
  return push(OpKind::concat_channels, std::vector<NodeId>(inputs.begin(), inputs.end()), std::move(out),
              [](Graph& g, NodeId self) {
                const auto& n = g.nodes_[self];
                std::size_t offset = 0;
                for (auto in : n.inputs) {
                  const std::size_t count = g.value(in).numel();
                  g.accumulate(in, std::span<const double>(n.grad).subspan(offset, count));
                  offset += count;
                }
              });
}

NodeId Graph::linear(NodeId input, NodeId weights, NodeId bias) {
  check_id(input);
  check_id(weights);
  check_id(bias);
  Tensor out = ops::linear(value(input), value(weights), value(bias));
  return push(OpKind::linear, {input, weights, bias}, std::move(out), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    const NodeId in = n.inputs[0], w = n.inputs[1], b = n.inputs[2];
    const auto& x = g.value(in);
    const auto& wt = g.value(w);
    const std::size_t k = wt.dim(0), d = wt.dim(1);
    if (g.nodes_[w].requires_grad) {
      std::vector<double> dw(k * d);
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < d; ++c) dw[r * d + c] = n.grad[r] * x[c];
      g.accumulate(w, dw);
    }
    g.accumulate(b, n.grad);
    if (g.nodes_[in].requires_grad) {
      std::vector<double> dx(d, 0.0);
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < d; ++c) dx[c] += n.grad[r] * wt[r * d + c];
      g.accumulate(in, dx);
    }
  });
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  Tensor out = ops::matmul(value(a), value(b));
  return push(OpKind::matmul, {a, b}, std::move(out), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    const NodeId ia = n.inputs[0], ib = n.inputs[1];
    const auto& av = g.value(ia);
    const auto& bv = g.value(ib);
    const std::size_t m = av.dim(0), k = av.dim(1);
    const std::size_t cols = bv.numel() / k;
    Tensor dout(Shape{m, cols}, n.grad);
    if (g.nodes_[ia].requires_grad) {
      // dA = dOut * B^T
      Tensor bt(Shape{cols, k});
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < cols; ++c) bt[c * k + r] = bv[r * cols + c];
      g.accumulate(ia, ops::matmul(dout, bt).data());
    }
    if (g.nodes_[ib].requires_grad) {
      // dB = A^T * dOut
      Tensor at(Shape{k, m});
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < k; ++c) at[c * m + r] = av[r * k + c];
      g.accumulate(ib, ops::matmul(at, dout).data());
    }
  });
}

NodeId Graph::relu(NodeId input) {
  check_id(input);
  const auto& x = value(input);
  Tensor out = ops::relu(x);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    bits = (bits << 1) | (x[i] > 0.0 ? 1u : 0u);
    if (i % 64 == 63) {
      mix_signature(bits);
      bits = 0;
    }
  }
  mix_signature(bits);
  return push(OpKind::relu, {input}, std::move(out), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    const auto& x = g.value(n.inputs[0]);
    std::vector<double> dx(x.numel());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = x[i] > 0.0 ? n.grad[i] : 0.0;
    g.accumulate(n.inputs[0], dx);
  });
}

NodeId Graph::add(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  const auto& av = value(a);
  const auto& bv = value(b);
  if (av.shape() != bv.shape()) {
    throw DimensionError(fmt::format("add: shapes {} and {} differ", shape_str(av.shape()), shape_str(bv.shape())));
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = av[i] + bv[i];
  return push(OpKind::add, {a, b}, std::move(out), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    g.accumulate(n.inputs[0], n.grad);
    g.accumulate(n.inputs[1], n.grad);
  });
}

NodeId Graph::scale(NodeId input, double factor) {
  check_id(input);
  const auto& x = value(input);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] * factor;
  return push(OpKind::scale, {input}, std::move(out), [factor](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    std::vector<double> dx(n.grad);
    for (auto& v : dx) v *= factor;
    g.accumulate(n.inputs[0], dx);
  });
}

NodeId Graph::sum(NodeId input) {
  check_id(input);
  double s = 0.0;
  for (double v : value(input).data()) s += v;
  return push(OpKind::sum, {input}, Tensor::scalar(s), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    g.accumulate(n.inputs[0], std::vector<double>(g.value(n.inputs[0]).numel(), n.grad[0]));
  });
}

NodeId Graph::mean(NodeId input) {
  check_id(input);
  const auto& x = value(input);
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double count = static_cast<double>(x.numel());
  return push(OpKind::mean, {input}, Tensor::scalar(s / count), [count](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    g.accumulate(n.inputs[0], std::vector<double>(g.value(n.inputs[0]).numel(), n.grad[0] / count));
  });
}

NodeId Graph::global_avg_pool(NodeId input) {
  check_id(input);
  Tensor out = ops::global_avg_pool(value(input));
  return push(OpKind::global_avg_pool, {input}, std::move(out), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    const auto& x = g.value(n.inputs[0]);
    const std::size_t plane = x.dim(1) * x.dim(2);
    std::vector<double> dx(x.numel());
    for (std::size_t c = 0; c < x.dim(0); ++c)
      for (std::size_t i = 0; i < plane; ++i) dx[c * plane + i] = n.grad[c] / static_cast<double>(plane);
    g.accumulate(n.inputs[0], dx);
  });
}

NodeId Graph::reshape(NodeId input, Shape shape) {
  check_id(input);
  Tensor out = value(input).reshaped(std::move(shape));
  return push(OpKind::reshape, {input}, std::move(out), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    g.accumulate(n.inputs[0], n.grad);
  });
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::size_t true_class) {
  check_id(logits);
  const double loss = ops::softmax_cross_entropy(value(logits), true_class);
  return push(OpKind::softmax_cross_entropy, {logits}, Tensor::scalar(loss), [true_class](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    auto p = ops::softmax(g.value(n.inputs[0]).data());
    p[true_class] -= 1.0;
    for (auto& v : p) v *= n.grad[0];
    g.accumulate(n.inputs[0], p);
  });
}

NodeId Graph::soft_threshold(NodeId a, NodeId theta) {
  check_id(a);
  check_id(theta);
  const auto& av = value(a);
  const auto& tv = value(theta);
  Tensor out = ops::soft_threshold(av, tv);
  const std::size_t k = tv.numel(), cols = av.numel() / k;
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    bits = bits * 3 + (out[i] > 0.0 ? 1u : out[i] < 0.0 ? 2u : 0u);
    if (i % 32 == 31) {
      mix_signature(bits);
      bits = 0;
    }
  }
  mix_signature(bits);
  // d/da = 1 outside the dead zone, 0 inside (and at the kink);
  // d/dtheta = -sign(a) outside the dead zone.
  return push(OpKind::soft_threshold, {a, theta}, std::move(out), [k, cols](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    std::vector<double> da(n.value.numel(), 0.0), dtheta(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t idx = i * cols + j;
        const double o = n.value[idx];
        if (o == 0.0) continue;
        da[idx] = n.grad[idx];
        dtheta[i] -= (o > 0.0 ? 1.0 : -1.0) * n.grad[idx];
      }
    }
    g.accumulate(n.inputs[0], da);
    g.accumulate(n.inputs[1], dtheta);
  });
}

NodeId Graph::exp(NodeId input) {
  check_id(input);
  const auto& x = value(input);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::exp(x[i]);
  return push(OpKind::exp, {input}, std::move(out), [](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    std::vector<double> dx(n.grad);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= n.value[i];
    g.accumulate(n.inputs[0], dx);
  });
}

NodeId Graph::mse(NodeId prediction, NodeId target) {
  check_id(prediction);
  check_id(target);
  const auto& p = value(prediction);
  const auto& t = value(target);
  if (p.numel() != t.numel()) {
    throw DimensionError(fmt::format("mse: prediction {} vs target {}", shape_str(p.shape()), shape_str(t.shape())));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.numel(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  const double count = static_cast<double>(p.numel());
  return push(OpKind::mse, {prediction, target}, Tensor::scalar(s / count), [count](Graph& g, NodeId self) {
    const auto& n = g.nodes_[self];
    const auto& p = g.value(n.inputs[0]);
    const auto& t = g.value(n.inputs[1]);
    std::vector<double> dp(p.numel()), dt(p.numel());
    for (std::size_t i = 0; i < p.numel(); ++i) {
      dp[i] = 2.0 * (p[i] - t[i]) / count * n.grad[0];
      dt[i] = -dp[i];
    }
    g.accumulate(n.inputs[0], dp);
    g.accumulate(n.inputs[1], dt);
  });
}

void Graph::backward(NodeId loss) {
  check_id(loss);
  if (value(loss).numel() != 1) {
    throw ContractError(fmt::format("backward needs a scalar loss, node {} has shape {}", loss,
                                    shape_str(value(loss).shape())));
  }
  for (auto& n : nodes_) n.grad.clear();
  if (!nodes_[loss].requires_grad) return;
  nodes_[loss].grad.assign(1, 1.0);
  for (NodeId id = loss + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
}

void Graph::accumulate_into(std::span<NamedParameter> params) const {
  for (auto& p : params) {
    if (p.tensor.requires_grad()) p.tensor.ensure_grad();
  }
  for (const auto& n : nodes_) {
    if (n.kind != OpKind::parameter || !n.requires_grad || n.grad.empty()) continue;
    if (n.slot >= params.size()) throw IndexError(fmt::format("parameter slot {} out of range", n.slot));
    auto dst = params[n.slot].tensor.ensure_grad();
    if (dst.size() != n.grad.size()) {
      throw DimensionError("parameter '" + params[n.slot].name + "' does not match its graph node");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
  }
}

}  // namespace dietnet
