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

#include <string>
#include <string_view>
#include <vector>

namespace dietnet::svg {

std::string escape(std::string_view text);

struct Point {
  double x = 0.0;
  double y = 0.0;
  std::string color = "#1f77b4";
};

struct Legend {
  std::string label;
  std::string color;
};

/// Scatter plot with linear axes starting at zero.
std::string scatter(const std::vector<Point>& points, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Legend>& legend = {});

/// Square heatmap of values in [0, 1] (white to dark blue) with row/column labels.
std::string heatmap(const std::vector<std::vector<double>>& values, const std::vector<std::string>& labels,
                    const std::string& title);

}  // namespace dietnet::svg
