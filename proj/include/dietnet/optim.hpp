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

#include <span>
#include <string>
#include <vector>

#include "dietnet/tensor.hpp"

namespace dietnet {

/// A trainable tensor with a stable name (used in checkpoints and errors).
/// requires_grad doubles as the freeze flag: frozen parameters neither
/// collect gradients nor move under sgd_step.
struct NamedParameter {
  std::string name;
  Tensor tensor;
};

/// Momentum buffers, one per parameter, created on first use.
struct SgdState {
  std::vector<std::vector<double>> velocity;
};

/// v <- momentum*v - lr*grad ; param <- param + v, for every parameter with
/// requires_grad set. Throws ContractError naming the first trainable
/// parameter that has no gradient.
void sgd_step(std::span<NamedParameter> params, double learning_rate, double momentum, SgdState& state);

/// Adam moments, one pair per parameter, created on first use.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t steps = 0;
};

/// Adam update (beta1 0.9, beta2 0.999, eps 1e-8) for every trainable parameter.
void adam_step(std::span<NamedParameter> params, double learning_rate, AdamState& state);

void zero_grads(std::span<NamedParameter> params);

/// Uniform on [-a, a] with variance 2/fan_in.
void init_scaled_uniform(Tensor& t, std::size_t fan_in, class Rng& rng);

}  // namespace dietnet
