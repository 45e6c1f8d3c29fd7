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

#include "dietnet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace dietnet::svg {

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

double nice_ceiling(double v) {
  if (v <= 0.0) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 5.0, 10.0}) {
    if (step * mag >= v) return step * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string scatter(const std::vector<Point>& points, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Legend>& legend) {
  constexpr double w = 480, h = 400, left = 60, right = 20, top = 40, bottom = 50;
  double max_x = 0.0, max_y = 0.0;
  for (const auto& p : points) {
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  max_x = nice_ceiling(max_x);
  max_y = nice_ceiling(max_y);
  const double pw = w - left - right, ph = h - top - bottom;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      w, h);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", w, h);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", w / 2, escape(title));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", left, top, pw, ph);
  for (int i = 0; i <= 4; ++i) {
    const double fx = left + pw * i / 4.0, fy = top + ph - ph * i / 4.0;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", fx, top + ph + 14, max_x * i / 4.0);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n", left - 4, fy + 4, max_y * i / 4.0);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, h - 12, escape(x_label));
  out += fmt::format("<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
                     top + ph / 2, top + ph / 2, escape(y_label));
  for (const auto& p : points) {
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
                       left + pw * p.x / max_x, top + ph - ph * p.y / max_y, p.color);
  }
  for (std::size_t i = 0; i < legend.size(); ++i) {
    const double y = top + 12 + 14.0 * static_cast<double>(i);
    out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}</text>\n",
                       left + 12, y - 4, legend[i].color, left + 20, y, escape(legend[i].label));
  }
  out += "</svg>\n";
  return out;
}

std::string heatmap(const std::vector<std::vector<double>>& values, const std::vector<std::string>& labels,
                    const std::string& title) {
  const std::size_t n = values.size();
  constexpr double cell = 28, left = 110, top = 50;
  const double side = cell * static_cast<double>(n);
  const double w = left + side + 20, h = top + side + 110;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"10\">\n",
      w, h);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", w, h);
  out += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", w / 2, escape(title));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < values[i].size(); ++j) {
      const double v = std::clamp(values[i][j], 0.0, 1.0);
      const int r = static_cast<int>(std::lround(255 - 230 * v)), g = static_cast<int>(std::lround(255 - 190 * v)),
                b = static_cast<int>(std::lround(255 - 100 * v));
      out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{}\" height=\"{}\" fill=\"rgb({},{},{})\"><title>{:.4f}</title></rect>\n",
                         left + cell * static_cast<double>(j), top + cell * static_cast<double>(i), cell, cell, r, g, b, v);
      if (v >= 0.005) {
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" fill=\"{}\">{:.2f}</text>\n",
                           left + cell * (static_cast<double>(j) + 0.5), top + cell * (static_cast<double>(i) + 0.5) + 3,
                           v > 0.5 ? "white" : "black", v);
      }
    }
    const std::string label = i < labels.size() ? labels[i] : std::to_string(i);
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 4,
                       top + cell * (static_cast<double>(i) + 0.5) + 3, escape(label));
    const double cx = left + cell * (static_cast<double>(i) + 0.5), cy = top + side + 6;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\" transform=\"rotate(-60 {:.1f} {:.1f})\">{}</text>\n",
                       cx, cy, cx, cy, escape(label));
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">predicted</text>\n", left + side / 2, h - 6);
  out += "</svg>\n";
  return out;
}

}  // namespace dietnet::svg
