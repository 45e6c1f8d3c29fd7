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
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dietnet/dataset.hpp"
#include "dietnet/image.hpp"

namespace dietnet {

/// Procedural coloured textures. Each class owns a pattern family, base
/// colours and a frequency; individual images vary in phase, hue, gain,
/// frequency, orientation and pixel noise.
RasterImage render_class_image(std::size_t class_id, std::size_t index, std::size_t width, std::size_t height,
                               std::uint64_t seed);

struct LabeledImage {
  RasterImage image;
  std::size_t label = 0;
};

/// In-memory set of `classes` x `per_class` images of a fixed size.
std::vector<LabeledImage> synthetic_image_set(std::size_t classes, std::size_t per_class, std::size_t side,
                                              std::uint64_t seed);

struct SyntheticOptions {
  std::size_t classes_a = 4;
  std::size_t classes_b = 4;
  std::size_t per_class = 24;
  std::size_t categories = 4;
  std::size_t a_side = 64;
  std::size_t b_min_side = 12;
  std::size_t b_max_side = 48;
  std::uint64_t seed = 42;
};

/// Writes PPM files under `root`/A and `root`/B plus `root`/manifest.tsv
/// (the merged A+B manifest) and returns that manifest. Categories are
/// assigned as dish index modulo `categories`.
Manifest generate_synthetic_dataset(const std::filesystem::path& root, const SyntheticOptions& options);

}  // namespace dietnet
