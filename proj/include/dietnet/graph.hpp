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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "dietnet/tensor.hpp"

namespace dietnet {

using NodeId = std::size_t;

enum class OpKind {
  constant,
  variable,
  parameter,
  conv2d,
  maxpool2d,
  concat_channels,
  linear,
  matmul,
  relu,
  add,
  scale,
  sum,
  mean,
  global_avg_pool,
  reshape,
  softmax_cross_entropy,
  soft_threshold,
  exp,
  mse,
};

std::string_view op_name(OpKind kind);

struct NamedParameter;

/// Reverse-mode tape.
///
/// Nodes are appended in evaluation order, so every input of a node is an
/// earlier node and backward simply walks the tape in reverse. A graph is
/// single-writer; independent graphs may be used from different threads as
/// long as they do not deposit into shared parameters concurrently.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  /// Leaf without gradient.
  NodeId constant(Tensor value);
  /// Leaf owned by the graph that receives a gradient.
  NodeId variable(Tensor value);
  /// Leaf that refers to an external tensor (not copied). Gradients flow to it
  /// only when the tensor has requires_grad set; `slot` identifies it when the
  /// gradients are collected with accumulate_into().
  NodeId parameter(const Tensor& value, std::size_t slot);

  NodeId conv2d(NodeId input, NodeId kernels, NodeId bias, std::size_t stride, std::size_t padding);
  NodeId maxpool2d(NodeId input, std::size_t window, std::size_t stride, std::size_t padding);
  NodeId concat_channels(std::span<const NodeId> inputs);
  NodeId linear(NodeId input, NodeId weights, NodeId bias);
  NodeId matmul(NodeId a, NodeId b);
  NodeId relu(NodeId input);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId input, double factor);
  NodeId sum(NodeId input);
  NodeId mean(NodeId input);
  NodeId global_avg_pool(NodeId input);
  NodeId reshape(NodeId input, Shape shape);
  NodeId softmax_cross_entropy(NodeId logits, std::size_t true_class);
  NodeId soft_threshold(NodeId a, NodeId theta);
  NodeId exp(NodeId input);
  /// mean((prediction - target)^2) over all elements
  NodeId mse(NodeId prediction, NodeId target);

  /// Populates gradients of every node that depends on a gradient-carrying
  /// leaf. The loss node must hold a single element.
  void backward(NodeId loss);

  /// Adds the parameter gradients of the last backward() into `params`,
  /// indexed by slot. Parameters with requires_grad that did not take part
  /// receive a zero gradient.
  void accumulate_into(std::span<NamedParameter> params) const;

  const Tensor& value(NodeId id) const;
  /// Gradient of the node from the last backward(); zeros if it was not reached.
  std::vector<double> grad(NodeId id) const;
  bool requires_grad(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::span<const NodeId> inputs(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Hash of every branch decision taken in the forward pass (relu masks,
  /// pooling routes, threshold dead zones). Two evaluations with the same
  /// signature lie on the same differentiable piece.
  std::uint64_t branch_signature() const noexcept { return signature_; }

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    bool requires_grad = false;
    std::vector<double> grad;
    std::function<void(Graph&, NodeId)> backward;
    const Tensor* external = nullptr;
    std::size_t slot = 0;
  };

  NodeId push(OpKind kind, std::vector<NodeId> inputs, Tensor value,
              std::function<void(Graph&, NodeId)> backward);
  void check_id(NodeId id) const;
  void mix_signature(std::uint64_t v);
  // adds `g` into the gradient buffer of `id` when it tracks gradients
  void accumulate(NodeId id, std::span<const double> g);
  const std::vector<double>& grad_ref(NodeId id) const { return nodes_[id].grad; }

  std::vector<Node> nodes_;
  std::uint64_t signature_ = 0xcbf29ce484222325ULL;
};

}  // namespace dietnet
