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

#include "dietnet/models.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "dietnet/errors.hpp"
#include "dietnet/ops.hpp"
#include "dietnet/rng.hpp"

namespace dietnet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

InceptionBlock build_inception_module(std::size_t in_channels, const std::array<InceptionBranchSpec, 4>& branches) {
  std::array<bool, 4> seen{};
  for (const auto& b : branches) {
    const auto k = static_cast<std::size_t>(b.kind);
    if (seen[k]) throw ValidationError("inception module needs exactly one branch of each kind");
    seen[k] = true;
    if (b.out_channels == 0) throw ValidationError("inception branch with zero output channels");
    const bool reduces = b.kind == BranchKind::reduce_conv3x3 || b.kind == BranchKind::reduce_conv5x5;
    if (reduces && (b.reduce_channels == 0 || b.reduce_channels >= in_channels)) {
      throw ValidationError(fmt::format("inception reduction to {} channels must be in [1, {})", b.reduce_channels,
                                        in_channels));
    }
  }
  InceptionBlock block;
  // canonical order: 1x1, 3x3, 5x5, pool
  for (const auto& b : branches) block.branches[static_cast<std::size_t>(b.kind)] = b;
  return block;
}

std::size_t inception_output_channels(const InceptionBlock& block) {
  std::size_t c = 0;
  for (const auto& b : block.branches) c += b.out_channels;
  return c;
}

std::size_t reduced_branch_weights(std::size_t in_channels, std::size_t reduce, std::size_t out, std::size_t k) {
  return in_channels * reduce + reduce * out * k * k;
}

std::size_t direct_branch_weights(std::size_t in_channels, std::size_t out, std::size_t k) {
  return in_channels * out * k * k;
}

Model::ConvParams Model::add_conv(const std::string& name, std::size_t in_c, std::size_t out_c, std::size_t k,
                                  std::size_t stride, std::size_t padding, Rng& rng) {
  ConvParams p{params_.size(), params_.size() + 1, stride, padding};
  Tensor w(Shape{out_c, in_c, k, k});
  init_scaled_uniform(w, in_c * k * k, rng);
  w.set_requires_grad(true);
  Tensor b(Shape{out_c});
  b.set_requires_grad(true);
  params_.push_back({name + ".weight", std::move(w)});
  params_.push_back({name + ".bias", std::move(b)});
  return p;
}

Model::LinearParams Model::add_linear(const std::string& name, std::size_t in_f, std::size_t out_f, Rng& rng) {
  LinearParams p{params_.size(), params_.size() + 1};
  Tensor w(Shape{out_f, in_f});
  init_scaled_uniform(w, in_f, rng);
  w.set_requires_grad(true);
  Tensor b(Shape{out_f});
  b.set_requires_grad(true);
  params_.push_back({name + ".weight", std::move(w)});
  params_.push_back({name + ".bias", std::move(b)});
  return p;
}

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  if (spec_.input_shape.size() != 3) throw ValidationError("model input shape must be C H W");
  if (spec_.num_classes == 0) throw ValidationError("model needs at least one class");
  for (const auto& aux : spec_.aux_heads) {
    if (aux.after_block >= spec_.blocks.size()) {
      throw ValidationError(fmt::format("aux head attached after block {} but the model has {} blocks",
                                        aux.after_block, spec_.blocks.size()));
    }
    if (!(aux.discount > 0.0 && aux.discount <= 1.0)) {
      throw ValidationError(fmt::format("aux discount {} outside (0, 1]", aux.discount));
    }
  }

  Rng rng(seed);
  Shape shape = spec_.input_shape;
  for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
    const std::string prefix = fmt::format("b{}", i);
    std::visit(
        Overloaded{
            [&](const ConvBlock& c) {
              if (shape.size() != 3) throw ValidationError(prefix + ": conv after flatten");
              block_param_slot_.push_back(conv_params_.size());
              conv_params_.push_back(add_conv(prefix + ".conv", shape[0], c.out_channels, c.kernel, c.stride, c.padding, rng));
              shape = {c.out_channels, ops::pooled_extent(shape[1], c.kernel, c.stride, c.padding),
                       ops::pooled_extent(shape[2], c.kernel, c.stride, c.padding)};
            },
            [&](const PoolBlock& p) {
              if (shape.size() != 3) throw ValidationError(prefix + ": pool after flatten");
              block_param_slot_.push_back(0);
              shape = {shape[0], ops::pooled_extent(shape[1], p.window, p.stride, p.padding),
                       ops::pooled_extent(shape[2], p.window, p.stride, p.padding)};
            },
            [&](const InceptionBlock& inc) {
              if (shape.size() != 3) throw ValidationError(prefix + ": inception after flatten");
              build_inception_module(shape[0], inc.branches);
              const auto& br = inc.branches;
              const auto in_c = shape[0];
              InceptionParams ip;
              ip.b1 = add_conv(prefix + ".inc1x1", in_c, br[0].out_channels, 1, 1, 0, rng);
              ip.b3_reduce = add_conv(prefix + ".inc3x3_reduce", in_c, br[1].reduce_channels, 1, 1, 0, rng);
              ip.b3 = add_conv(prefix + ".inc3x3", br[1].reduce_channels, br[1].out_channels, 3, 1, 1, rng);
              ip.b5_reduce = add_conv(prefix + ".inc5x5_reduce", in_c, br[2].reduce_channels, 1, 1, 0, rng);
              ip.b5 = add_conv(prefix + ".inc5x5", br[2].reduce_channels, br[2].out_channels, 5, 1, 2, rng);
              ip.pool_proj = add_conv(prefix + ".inc_pool_proj", in_c, br[3].out_channels, 1, 1, 0, rng);
              // every branch must land on the same spatial grid
              const std::array<std::size_t, 4> heights{
                  ops::pooled_extent(shape[1], 1, 1, 0),
                  ops::pooled_extent(shape[1], 3, 1, 1),
                  ops::pooled_extent(shape[1], 5, 1, 2),
                  ops::pooled_extent(shape[1], 3, 1, 1),
              };
              if (std::adjacent_find(heights.begin(), heights.end(), std::not_equal_to<>()) != heights.end()) {
                throw ValidationError(prefix + ": inception branches disagree on spatial size");
              }
              block_param_slot_.push_back(inception_params_.size());
              inception_params_.push_back(ip);
              shape = {inception_output_channels(inc), shape[1], shape[2]};
            },
            [&](const GlobalAvgPoolBlock&) {
              if (shape.size() != 3) throw ValidationError(prefix + ": global pool after flatten");
              block_param_slot_.push_back(0);
              shape = {shape[0]};
            },
            [&](const FlattenBlock&) {
              block_param_slot_.push_back(0);
              shape = {shape_numel(shape)};
            },
            [&](const LinearBlock& l) {
              if (shape.size() != 1) throw ValidationError(prefix + ": linear layer needs a flattened input");
              block_param_slot_.push_back(linear_params_.size());
              linear_params_.push_back(add_linear(prefix + ".fc", shape[0], l.out_features, rng));
              shape = {l.out_features};
            },
        },
        spec_.blocks[i]);
    block_shapes_.push_back(shape);
  }
  if (shape.size() != 1) throw ValidationError("the block list must end in a flattened or pooled feature vector");
  feature_shape_ = shape;

  for (std::size_t j = 0; j < spec_.aux_heads.size(); ++j) {
    const auto& s = block_shapes_[spec_.aux_heads[j].after_block];
    if (s.size() != 3) throw ValidationError("aux heads attach to feature maps, not vectors");
    aux_params_.push_back(add_linear(fmt::format("aux{}.fc", j), s[0], spec_.num_classes, rng));
  }
  classifier_ = add_linear("classifier", shape[0], spec_.num_classes, rng);
}

NodeId Model::param(Graph& g, std::size_t index) const { return g.parameter(params_[index].tensor, index); }

NodeId Model::conv_relu(Graph& g, NodeId x, const ConvParams& p) const {
  return g.relu(g.conv2d(x, param(g, p.weight), param(g, p.bias), p.stride, p.padding));
}

NodeId Model::linear(Graph& g, NodeId x, const LinearParams& p) const {
  return g.linear(x, param(g, p.weight), param(g, p.bias));
}

ForwardOutput Model::forward(Graph& g, NodeId input, bool with_aux) const {
  if (g.value(input).shape() != spec_.input_shape) {
    throw DimensionError(fmt::format("model expects input {}, got {}", shape_str(spec_.input_shape),
                                     shape_str(g.value(input).shape())));
  }
  ForwardOutput out;
  std::vector<NodeId> block_out;
  NodeId x = input;
  for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
    const std::size_t slot = block_param_slot_[i];
    x = std::visit(Overloaded{
                       [&](const ConvBlock&) { return conv_relu(g, x, conv_params_[slot]); },
                       [&](const PoolBlock& p) { return g.maxpool2d(x, p.window, p.stride, p.padding); },
                       [&](const InceptionBlock&) {
                         const auto& ip = inception_params_[slot];
                         const std::array<NodeId, 4> branches{
                             conv_relu(g, x, ip.b1),
                             conv_relu(g, conv_relu(g, x, ip.b3_reduce), ip.b3),
                             conv_relu(g, conv_relu(g, x, ip.b5_reduce), ip.b5),
                             conv_relu(g, g.maxpool2d(x, 3, 1, 1), ip.pool_proj),
                         };
                         return g.concat_channels(branches);
                       },
                       [&](const GlobalAvgPoolBlock&) { return g.global_avg_pool(x); },
                       [&](const FlattenBlock&) { return g.reshape(x, Shape{g.value(x).numel()}); },
                       [&](const LinearBlock& l) {
                         NodeId y = linear(g, x, linear_params_[slot]);
                         return l.relu ? g.relu(y) : y;
                       },
                   },
                   spec_.blocks[i]);
    block_out.push_back(x);
  }
  if (with_aux) {
    for (std::size_t j = 0; j < spec_.aux_heads.size(); ++j) {
      NodeId pooled = g.global_avg_pool(block_out[spec_.aux_heads[j].after_block]);
      out.aux_logits.push_back(linear(g, pooled, aux_params_[j]));
    }
  }
  out.logits = linear(g, x, classifier_);
  return out;
}

Tensor Model::predict(const Tensor& input) const {
  Graph g;
  const auto out = forward(g, g.constant(input), false);
  return g.value(out.logits);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

std::size_t Model::weighted_layer_count() const {
  std::size_t n = 1;  // classifier
  for (const auto& b : spec_.blocks) {
    n += std::visit(Overloaded{
                        [](const ConvBlock&) -> std::size_t { return 1; },
                        [](const InceptionBlock&) -> std::size_t { return 2; },
                        [](const LinearBlock&) -> std::size_t { return 1; },
                        [](const auto&) -> std::size_t { return 0; },
                    },
                    b);
  }
  return n;
}

std::size_t Model::layer_count_with_pooling() const {
  std::size_t pools = 0;
  for (const auto& b : spec_.blocks) {
    if (std::holds_alternative<PoolBlock>(b) || std::holds_alternative<GlobalAvgPoolBlock>(b)) ++pools;
  }
  return weighted_layer_count() + pools;
}

bool Model::is_classifier(std::size_t param_index) const {
  return param_index == classifier_.weight || param_index == classifier_.bias;
}

void Model::apply_freeze_mode(FreezeMode mode) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& t = params_[i].tensor;
    const bool trainable = mode == FreezeMode::all_layers || is_classifier(i);
    t.set_requires_grad(trainable);
    if (!trainable) t.clear_grad();
  }
}

std::size_t Model::load_matching(std::span<const NamedParameter> other) {
  std::size_t taken = 0;
  for (auto& p : params_) {
    auto it = std::find_if(other.begin(), other.end(), [&](const NamedParameter& o) { return o.name == p.name; });
    if (it == other.end() || it->tensor.shape() != p.tensor.shape()) continue;
    std::copy(it->tensor.data().begin(), it->tensor.data().end(), p.tensor.data().begin());
    ++taken;
  }
  return taken;
}

double total_loss(double main_loss, std::span<const double> aux_losses, double discount) {
  double aux = 0.0;
  for (double a : aux_losses) aux += a;
  return main_loss + discount * aux;
}

NodeId total_loss(Graph& g, NodeId main_loss, std::span<const NodeId> aux_losses, double discount) {
  NodeId total = main_loss;
  for (auto a : aux_losses) total = g.add(total, g.scale(a, discount));
  return total;
}

namespace {

InceptionBlock inception(std::size_t in_c, std::size_t c1, std::size_t r3, std::size_t c3, std::size_t r5,
                         std::size_t c5, std::size_t pp) {
  return build_inception_module(in_c, {{
                                          {BranchKind::conv1x1, 0, c1},
                                          {BranchKind::reduce_conv3x3, r3, c3},
                                          {BranchKind::reduce_conv5x5, r5, c5},
                                          {BranchKind::pool3x3_conv1x1, 0, pp},
                                      }});
}

}  // namespace

ModelSpec toy_inception_spec(std::size_t num_classes, Shape input_shape, double aux_discount) {
  ModelSpec s;
  s.input_shape = std::move(input_shape);
  s.num_classes = num_classes;
  s.blocks = {
      ConvBlock{16, 3, 1, 1},
      PoolBlock{3, 2, 1},
      inception(16, 8, 8, 12, 4, 6, 6),   // -> 32
      inception(32, 12, 12, 16, 4, 8, 8),  // -> 44
      PoolBlock{3, 2, 1},
      inception(44, 16, 16, 24, 6, 8, 8),  // -> 56
      GlobalAvgPoolBlock{},
  };
  s.aux_heads = {AuxHeadSpec{3, aux_discount}};
  return s;
}

ModelSpec googlenet_spec(std::size_t num_classes) {
  ModelSpec s;
  s.input_shape = {3, 224, 224};
  s.num_classes = num_classes;
  s.blocks = {
      ConvBlock{64, 7, 2, 3},
      PoolBlock{3, 2, 1},
      ConvBlock{64, 1, 1, 0},
      ConvBlock{192, 3, 1, 1},
      PoolBlock{3, 2, 1},
      inception(192, 64, 96, 128, 16, 32, 32),
      inception(256, 128, 128, 192, 32, 96, 64),
      PoolBlock{3, 2, 1},
      inception(480, 192, 96, 208, 16, 48, 64),
      inception(512, 160, 112, 224, 24, 64, 64),
      inception(512, 128, 128, 256, 24, 64, 64),
      inception(512, 112, 144, 288, 32, 64, 64),
      inception(528, 256, 160, 320, 32, 128, 128),
      PoolBlock{3, 2, 1},
      inception(832, 256, 160, 320, 32, 128, 128),
      inception(832, 384, 192, 384, 48, 128, 128),
      GlobalAvgPoolBlock{},
  };
  s.aux_heads = {AuxHeadSpec{8, 0.3}, AuxHeadSpec{11, 0.3}};
  return s;
}

ModelSpec vgg_style_spec(std::span<const std::size_t> block_depths, std::span<const std::size_t> block_channels,
                         std::size_t num_classes, Shape input_shape, std::size_t hidden) {
  if (block_depths.size() != block_channels.size() || block_depths.empty()) {
    throw ValidationError(fmt::format("vgg blocks: {} depths vs {} channel widths", block_depths.size(),
                                      block_channels.size()));
  }
  if (input_shape.size() != 3) throw ValidationError("vgg input shape must be C H W");
  const std::size_t divisor = std::size_t{1} << block_depths.size();
  if (input_shape[1] % divisor != 0 || input_shape[2] % divisor != 0) {
    throw ValidationError(fmt::format("input {}x{} is not divisible by 2^{} = {}", input_shape[1], input_shape[2],
                                      block_depths.size(), divisor));
  }
  ModelSpec s;
  s.input_shape = std::move(input_shape);
  s.num_classes = num_classes;
  for (std::size_t i = 0; i < block_depths.size(); ++i) {
    if (block_depths[i] == 0) throw ValidationError("vgg block with zero convolutions");
    for (std::size_t d = 0; d < block_depths[i]; ++d) s.blocks.push_back(ConvBlock{block_channels[i], 3, 1, 1});
    s.blocks.push_back(PoolBlock{2, 2, 0});
  }
  s.blocks.push_back(FlattenBlock{});
  s.blocks.push_back(LinearBlock{hidden, true});
  s.blocks.push_back(LinearBlock{hidden, true});
  return s;
}

Model build_toy_inception_net(const ModelSpec& spec, std::uint64_t seed) { return Model(spec, seed); }

Model build_vgg_style_net(std::span<const std::size_t> block_depths, std::span<const std::size_t> block_channels,
                          std::size_t num_classes, Shape input_shape, std::uint64_t seed, std::size_t hidden) {
  return Model(vgg_style_spec(block_depths, block_channels, num_classes, std::move(input_shape), hidden), seed);
}

}  // namespace dietnet
