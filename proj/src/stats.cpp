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

#include <fmt/format.h>
#include <map>
#include <set>

#include "dietnet/dataset.hpp"
#include "dietnet/svg.hpp"

namespace dietnet {

DatasetStats dataset_stats(const Manifest& manifest, bool read_dimensions) {
  DatasetStats s;
  s.total = manifest.size();
  std::map<std::string, std::set<std::size_t>> dishes;
  std::map<std::string, std::size_t> images;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& r = manifest.records()[i];
    const std::string cat = r.category_label.value_or("(none)");
    dishes[cat].insert(manifest.class_of(i));
    ++images[cat];
  }
  for (const auto& [cat, n] : images) {
    const double pct = s.total == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(s.total);
    s.categories.push_back({cat, dishes[cat].size(), n, pct});
  }
  const auto sizes = manifest.class_sizes();
  for (std::size_t c = 0; c < sizes.size(); ++c) s.class_counts.emplace_back(manifest.class_name(c), sizes[c]);
  if (read_dimensions) {
    for (const auto& r : manifest.records()) s.dimensions.emplace_back(read_pnm_size(r.image_path), r.source);
  }
  return s;
}

std::string stats_csv(const DatasetStats& stats) {
  std::string out = "section,name,dishes,images,percent\n";
  for (const auto& c : stats.categories) {
    out += fmt::format("category,{},{},{},{:.2f}\n", c.category, c.dishes, c.images, c.percent);
  }
  out += fmt::format("total,all,{},{},100.00\n", stats.class_counts.size(), stats.total);
  for (const auto& [name, n] : stats.class_counts) out += fmt::format("class,{},1,{},\n", name, n);
  return out;
}

std::string dimensions_svg(const DatasetStats& stats, const std::string& title) {
  std::vector<svg::Point> pts;
  for (const auto& [size, source] : stats.dimensions) {
    pts.push_back({static_cast<double>(size.width), static_cast<double>(size.height),
                   source == Source::A ? "#1f77b4" : "#d62728"});
  }
  return svg::scatter(pts, title, "width (px)", "height (px)", {{"source A", "#1f77b4"}, {"source B", "#d62728"}});
}

}  // namespace dietnet
