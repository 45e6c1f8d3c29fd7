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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dietnet/graph.hpp"
#include "dietnet/optim.hpp"
#include "dietnet/tensor.hpp"

namespace dietnet {

enum class BranchKind { conv1x1, reduce_conv3x3, reduce_conv5x5, pool3x3_conv1x1 };

struct InceptionBranchSpec {
  BranchKind kind = BranchKind::conv1x1;
  std::size_t reduce_channels = 0;  // unused for conv1x1 and the pool branch
  std::size_t out_channels = 1;
};

struct ConvBlock {
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
};

struct PoolBlock {
  std::size_t window = 2;
  std::size_t stride = 2;
  std::size_t padding = 0;
};

/// Four parallel branches (1x1, 1x1->3x3, 1x1->5x5, 3x3 pool->1x1) whose
/// outputs are concatenated along channels. Padding keeps the spatial size.
struct InceptionBlock {
  std::array<InceptionBranchSpec, 4> branches;
};

struct GlobalAvgPoolBlock {};
struct FlattenBlock {};

struct LinearBlock {
  std::size_t out_features = 1;
  bool relu = true;
};

using Block = std::variant<ConvBlock, PoolBlock, InceptionBlock, GlobalAvgPoolBlock, FlattenBlock, LinearBlock>;

/// Auxiliary classifier (global average pool + linear) fed by the output of
/// blocks[after_block]. Its loss is added with weight `discount`.
struct AuxHeadSpec {
  std::size_t after_block = 0;
  double discount = 0.3;
};

/// Declarative network description. The final classifier (a linear layer to
/// num_classes) is implicit and always follows the last block.
struct ModelSpec {
  Shape input_shape{3, 28, 28};
  std::vector<Block> blocks;
  std::vector<AuxHeadSpec> aux_heads;
  std::size_t num_classes = 2;
};

/// Validates the four branches against the incoming channel count and
/// returns the module. Throws ValidationError on a bad branch set.
InceptionBlock build_inception_module(std::size_t in_channels, const std::array<InceptionBranchSpec, 4>& branches);

std::size_t inception_output_channels(const InceptionBlock& block);

/// Weights (no biases) of a 1x1 reduction to `reduce` channels followed by a
/// k x k convolution, versus a direct k x k convolution.
std::size_t reduced_branch_weights(std::size_t in_channels, std::size_t reduce, std::size_t out, std::size_t k);
std::size_t direct_branch_weights(std::size_t in_channels, std::size_t out, std::size_t k);

struct ForwardOutput {
  NodeId logits = 0;
  std::vector<NodeId> aux_logits;
};

enum class FreezeMode { all_layers, last_fc_only };

class Model {
 public:
  Model(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const noexcept { return spec_; }

  /// Adds the network to `g`. Aux heads are evaluated only when `with_aux`.
  ForwardOutput forward(Graph& g, NodeId input, bool with_aux = true) const;

  /// Main-head logits for one [C,H,W] input.
  Tensor predict(const Tensor& input) const;

  std::span<NamedParameter> parameters() noexcept { return params_; }
  std::span<const NamedParameter> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;

  /// Shape produced by blocks[i] for spec.input_shape.
  const Shape& block_output_shape(std::size_t i) const { return block_shapes_.at(i); }
  /// Shape entering the implicit classifier.
  const Shape& feature_shape() const { return feature_shape_; }

  /// Parametrised layers on the main path: conv and linear count 1, an
  /// inception module counts 2 (reduction + spatial conv), plus the classifier.
  std::size_t weighted_layer_count() const;
  /// weighted_layer_count() plus pooling layers (max and global average).
  std::size_t layer_count_with_pooling() const;

  /// True for the implicit classifier's weight and bias.
  bool is_classifier(std::size_t param_index) const;

  void apply_freeze_mode(FreezeMode mode);

  /// Copies values from `other` wherever name and shape match; returns how
  /// many tensors were taken.
  std::size_t load_matching(std::span<const NamedParameter> other);

 private:
  struct ConvParams {
    std::size_t weight = 0;
    std::size_t bias = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;
  };
  struct InceptionParams {
    ConvParams b1, b3_reduce, b3, b5_reduce, b5, pool_proj;
  };
  struct LinearParams {
    std::size_t weight = 0;
    std::size_t bias = 0;
  };

  ConvParams add_conv(const std::string& name, std::size_t in_c, std::size_t out_c, std::size_t k,
                      std::size_t stride, std::size_t padding, class Rng& rng);
  LinearParams add_linear(const std::string& name, std::size_t in_f, std::size_t out_f, class Rng& rng);

  NodeId conv_relu(Graph& g, NodeId x, const ConvParams& p) const;
  NodeId linear(Graph& g, NodeId x, const LinearParams& p) const;
  NodeId param(Graph& g, std::size_t index) const;

  ModelSpec spec_;
  std::vector<NamedParameter> params_;
  std::vector<Shape> block_shapes_;
  Shape feature_shape_;
  // per block: which parameter indices it uses (variant-free bookkeeping)
  std::vector<ConvParams> conv_params_;
  std::vector<InceptionParams> inception_params_;
  std::vector<LinearParams> linear_params_;
  std::vector<std::size_t> block_param_slot_;
  std::vector<LinearParams> aux_params_;
  LinearParams classifier_;
};

/// main + discount * sum(aux)
double total_loss(double main_loss, std::span<const double> aux_losses, double discount);
NodeId total_loss(Graph& g, NodeId main_loss, std::span<const NodeId> aux_losses, double discount);

/// Desk-scale inception network: stem conv, three inception modules, one aux
/// head, global average pool and a linear classifier.
ModelSpec toy_inception_spec(std::size_t num_classes, Shape input_shape = {3, 28, 28}, double aux_discount = 0.3);

/// Full-depth layout (stem, nine inception modules, two aux heads) kept for
/// reference; far too slow to train here.
ModelSpec googlenet_spec(std::size_t num_classes);

/// VGG-style stack: block i has depths[i] 3x3/pad-1 convolutions at
/// channels[i], then a 2x2/stride-2 max pool; then flatten and three linear
/// layers (two hidden of width `hidden`, then the classifier).
ModelSpec vgg_style_spec(std::span<const std::size_t> block_depths, std::span<const std::size_t> block_channels,
                         std::size_t num_classes, Shape input_shape = {3, 224, 224}, std::size_t hidden = 256);

Model build_toy_inception_net(const ModelSpec& spec, std::uint64_t seed);
Model build_vgg_style_net(std::span<const std::size_t> block_depths, std::span<const std::size_t> block_channels,
                          std::size_t num_classes, Shape input_shape, std::uint64_t seed, std::size_t hidden = 256);

// Plain-text model description (see docs in README):
//   input = 3 28 28
//   classes = 8
//   aux = <after_block> <discount>
//   block conv <out> <kernel> <stride> <padding>
//   block pool <window> <stride> <padding>
//   block inception <1x1> <3x3-reduce> <3x3> <5x5-reduce> <5x5> <pool-proj>
//   block gap | block flatten
//   block fc <out> [relu|linear]
ModelSpec parse_model_spec(const std::string& text);
std::string format_model_spec(const ModelSpec& spec);

}  // namespace dietnet
