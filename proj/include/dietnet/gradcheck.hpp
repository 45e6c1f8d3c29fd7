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
#include <functional>
#include <span>
#include <string>

#include "dietnet/graph.hpp"
#include "dietnet/optim.hpp"

namespace dietnet {

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-3;
  // denominators of the relative error never drop below this
  double floor = 1e-4;
  // 0 checks every element, otherwise an evenly strided subset per tensor
  std::size_t max_elements_per_tensor = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  // elements whose +/- step evaluations changed a relu mask, pooling route or
  // threshold dead zone; the derivative is not defined there
  std::size_t skipped_at_kinks = 0;
  double max_relative_error = 0.0;
  std::string worst;  // "<param>[index]: analytic vs numeric"
  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

/// Compares backward() gradients with central finite differences.
///
/// `build` must construct the scalar loss from scratch on the given graph,
/// registering params[i] through Graph::parameter(params[i].tensor, i). It is
/// called once for the analytic pass and twice per checked element.
GradCheckReport check_gradients(std::span<NamedParameter> params,
                                const std::function<NodeId(Graph&)>& build,
                                const GradCheckOptions& options = {});

}  // namespace dietnet
