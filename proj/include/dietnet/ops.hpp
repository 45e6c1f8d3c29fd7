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
#include <limits>
#include <span>
#include <vector>

#include "dietnet/tensor.hpp"

// Eager forward and backward kernels. The graph in graph.hpp wires these
// together; they are also usable on their own for inference.
namespace dietnet::ops {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

/// floor((extent + 2*padding - window) / stride) + 1, or a DimensionError when
/// the window does not fit the padded extent.
std::size_t pooled_extent(std::size_t extent, std::size_t window, std::size_t stride,
                          std::size_t padding);

// input [C_in,H,W], kernels [C_out,C_in,kH,kW], bias [C_out] -> [C_out,H',W']
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
              std::size_t padding);

struct Conv2dGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                            std::size_t stride, std::size_t padding, bool need_input_grad = true);

struct MaxPoolResult {
  Tensor output;
  // flat input index of the selected element per output; kNoIndex when the
  // window only covers padding (output is 0 there)
  std::vector<std::size_t> argmax;
};
MaxPoolResult maxpool2d(const Tensor& input, std::size_t window, std::size_t stride,
                        std::size_t padding);
Tensor maxpool2d_backward(const Shape& input_shape, std::span<const std::size_t> argmax,
                          const Tensor& grad_out);

Tensor concat_channels(std::span<const Tensor> inputs);
Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t count);

// input [D], weights [K,D], bias [K] -> [K]
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias);

// [M,K] x [K,N] -> [M,N]; rank-1 right operands are treated as [K,1]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& input);

// [C,H,W] -> [C]
Tensor global_avg_pool(const Tensor& input);

std::vector<double> softmax(std::span<const double> logits);
double softmax_cross_entropy(const Tensor& logits, std::size_t true_class);

/// sign(a)*max(|a| - theta, 0) per element. a is [K] or [K,N]; theta is [K]
/// and broadcasts along N. Every theta must be strictly positive.
Tensor soft_threshold(const Tensor& a, const Tensor& theta);

}  // namespace dietnet::ops
