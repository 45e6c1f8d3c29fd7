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

#include "dietnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "dietnet/rng.hpp"

namespace dietnet {

namespace {

std::array<double, 3> hsv(double h, double s, double v) {
  h = (h - std::floor(h)) * 6.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

}  // namespace

RasterImage render_class_image(std::size_t class_id, std::size_t index, std::size_t width, std::size_t height,
                               std::uint64_t seed) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double cd = static_cast<double>(class_id);
  const std::size_t family = class_id % 4;
  Rng rng = Rng::derive(seed, {class_id, index, 0x7e47});
  // per-image nuisance: hue, brightness, scale, orientation and placement
  const double hue = rng.uniform(-0.07, 0.07);
  const double gain = rng.uniform(0.75, 1.1);
  const double freq = (2.0 + static_cast<double>((class_id / 4) % 3) * 1.5) * rng.uniform(0.85, 1.15);
  const auto c1 = hsv(0.1 + 0.618034 * cd + hue, 0.75, 0.9 * gain);
  const auto c2 = hsv(0.6 + 0.618034 * cd + hue, 0.6, (0.25 + 0.1 * static_cast<double>(class_id % 3)) * gain);
  const double base_angle = std::fmod(cd * 37.0, 180.0) * std::numbers::pi / 180.0;
  const double angle = base_angle + rng.uniform(-0.3, 0.3);
  const double phase = rng.uniform(0.0, two_pi);
  const double cx = rng.uniform(0.3, 0.7), cy = rng.uniform(0.3, 0.7);
  const double ca = std::cos(angle), sa = std::sin(angle);

  RasterImage img(width, height, 3);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
      const double xr = ca * u + sa * v;
      const double yr = -sa * u + ca * v;
      double t = 0.0;
      switch (family) {
        case 0:  // stripes
          t = 0.5 + 0.5 * std::sin(two_pi * freq * xr + phase);
          break;
        case 1:  // checks
          t = std::sin(two_pi * freq * xr + phase) * std::sin(two_pi * freq * yr + phase) > 0 ? 1.0 : 0.0;
          break;
        case 2:  // rings
          t = 0.5 + 0.5 * std::sin(two_pi * freq * std::hypot(u - cx, v - cy) + phase);
          break;
        default:  // dots
          t = std::pow(std::abs(std::sin(std::numbers::pi * freq * xr + phase) *
                                std::sin(std::numbers::pi * freq * yr + phase)), 3.0);
          break;
      }
      for (std::size_t c = 0; c < 3; ++c) {
        const double val = 255.0 * (c2[c] + (c1[c] - c2[c]) * t) + rng.uniform(-30.0, 30.0);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
      }
    }
  }
  return img;
}

std::vector<LabeledImage> synthetic_image_set(std::size_t classes, std::size_t per_class, std::size_t side,
                                              std::uint64_t seed) {
  std::vector<LabeledImage> out;
  out.reserve(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) out.push_back({render_class_image(c, i, side, side, seed), c});
  }
  return out;
}

Manifest generate_synthetic_dataset(const std::filesystem::path& root, const SyntheticOptions& o) {
  const auto abs_root = std::filesystem::absolute(root).lexically_normal();
  auto make_set = [&](Source source, std::size_t classes, std::size_t class_offset) {
    std::vector<SampleRecord> records;
    Rng rng = Rng::derive(o.seed, {source == Source::A ? 0xAu : 0xBu});
    for (std::size_t d = 0; d < classes; ++d) {
      const std::string dish = fmt::format("{}_dish_{:02}", source == Source::A ? "a" : "b", d);
      const std::string category = fmt::format("category_{:02}", d % std::max<std::size_t>(o.categories, 1));
      for (std::size_t i = 0; i < o.per_class; ++i) {
        std::size_t w = 0, h = 0;
        if (source == Source::A) {
          const auto other = static_cast<std::size_t>(std::lround(static_cast<double>(o.a_side) * rng.uniform(0.75, 1.0)));
          w = o.a_side;
          h = other;
          if (rng.index(2) == 1) std::swap(w, h);
        } else {
          w = o.b_min_side + rng.index(o.b_max_side - o.b_min_side + 1);
          h = o.b_min_side + rng.index(o.b_max_side - o.b_min_side + 1);
        }
        const auto path = abs_root / std::string(to_string(source)) / dish / fmt::format("{}_{:03}.ppm", dish, i);
        write_pnm(path, render_class_image(class_offset + d, i, w, h, o.seed));
        records.push_back({path.string(), dish, category, source, Split::unassigned});
      }
    }
    return Manifest(std::move(records));
  };
  const Manifest a = make_set(Source::A, o.classes_a, 0);
  const Manifest b = make_set(Source::B, o.classes_b, o.classes_a);
  Manifest merged = merge_datasets(a, b);
  save_manifest(abs_root / "manifest.tsv", merged);
  return merged;
}

}  // namespace dietnet
