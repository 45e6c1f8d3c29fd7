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

#include "dietnet/optim.hpp"

#include <cmath>

#include "dietnet/errors.hpp"
#include "dietnet/rng.hpp"

namespace dietnet {

void sgd_step(std::span<NamedParameter> params, double learning_rate, double momentum, SgdState& state) {
  for (const auto& p : params) {
    if (p.tensor.requires_grad() && !p.tensor.has_grad()) {
      throw ContractError("sgd_step: parameter '" + p.name + "' has no gradient");
    }
  }
  if (state.velocity.size() != params.size()) state.velocity.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].tensor;
    if (!p.requires_grad()) continue;
    auto& v = state.velocity[i];
    if (v.size() != p.numel()) v.assign(p.numel(), 0.0);
    const auto g = p.grad();
    auto w = p.data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = momentum * v[j] - learning_rate * g[j];
      w[j] += v[j];
    }
  }
}

void adam_step(std::span<NamedParameter> params, double learning_rate, AdamState& state) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (const auto& p : params) {
    if (p.tensor.requires_grad() && !p.tensor.has_grad()) {
      throw ContractError("adam_step: parameter '" + p.name + "' has no gradient");
    }
  }
  state.m.resize(params.size());
  state.v.resize(params.size());
  ++state.steps;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.steps));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].tensor;
    if (!p.requires_grad()) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.numel()) {
      m.assign(p.numel(), 0.0);
      v.assign(p.numel(), 0.0);
    }
    const auto g = p.grad();
    auto w = p.data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      w[j] -= learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }
}

void zero_grads(std::span<NamedParameter> params) {
  for (auto& p : params) {
    if (p.tensor.requires_grad()) {
      p.tensor.ensure_grad();
      p.tensor.zero_grad();
    }
  }
}

void init_scaled_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = rng.uniform(-a, a);
}

}  // namespace dietnet
