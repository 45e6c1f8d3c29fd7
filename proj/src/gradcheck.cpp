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

#include "dietnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace dietnet {

GradCheckReport check_gradients(std::span<NamedParameter> params,
                                const std::function<NodeId(Graph&)>& build,
                                const GradCheckOptions& options) {
  for (auto& p : params) p.tensor.clear_grad();

  std::uint64_t base_signature = 0;
  {
    Graph g;
    const NodeId loss = build(g);
    g.backward(loss);
    g.accumulate_into(params);
    base_signature = g.branch_signature();
  }

  auto evaluate = [&](std::uint64_t& signature) {
    Graph g;
    const NodeId loss = build(g);
    signature = g.branch_signature();
    return g.value(loss)[0];
  };

  GradCheckReport report;
  for (auto& p : params) {
    if (!p.tensor.requires_grad()) continue;
    const std::size_t n = p.tensor.numel();
    const std::size_t stride =
        options.max_elements_per_tensor == 0 ? 1 : std::max<std::size_t>(1, n / options.max_elements_per_tensor);
    for (std::size_t i = 0; i < n; i += stride) {
      double& x = p.tensor.data()[i];
      const double saved = x;
      std::uint64_t sig_plus = 0, sig_minus = 0;
      x = saved + options.step;
      const double f_plus = evaluate(sig_plus);
      x = saved - options.step;
      const double f_minus = evaluate(sig_minus);
      x = saved;
      if (sig_plus != base_signature || sig_minus != base_signature) {
        ++report.skipped_at_kinks;
        continue;
      }
      const double numeric = (f_plus - f_minus) / (2.0 * options.step);
      const double analytic = p.tensor.grad()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_relative_error || report.worst.empty()) {
        report.max_relative_error = std::max(rel, report.max_relative_error);
        if (rel >= report.max_relative_error) {
          report.worst = fmt::format("{}[{}]: analytic {:.6g} vs numeric {:.6g}", p.name, i, analytic, numeric);
        }
      }
    }
  }
  return report;
}

}  // namespace dietnet
