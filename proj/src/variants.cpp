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

#include <algorithm>
#include <fmt/format.h>

#include "dietnet/dataset.hpp"
#include "dietnet/errors.hpp"
#include "dietnet/super_resolution.hpp"

namespace dietnet {

namespace {

std::filesystem::path common_root(const Manifest& m) {
  std::filesystem::path root;
  bool first = true;
  for (const auto& r : m.records()) {
    const auto dir = std::filesystem::path(r.image_path).parent_path();
    if (first) {
      root = dir;
      first = false;
      continue;
    }
    std::filesystem::path common;
    auto a = root.begin(), b = dir.begin();
    for (; a != root.end() && b != dir.end() && *a == *b; ++a, ++b) common /= *a;
    root = common;
  }
  return root;
}

std::filesystem::path mirrored(const std::filesystem::path& file, const std::filesystem::path& source_root,
                               const std::filesystem::path& out_root) {
  auto rel = file.lexically_relative(source_root);
  if (rel.empty() || *rel.begin() == "..") rel = file.filename();
  rel.replace_extension(".ppm");
  return out_root / rel;
}

}  // namespace

VariantResult apply_variant(const Manifest& manifest, DatasetVariant variant, const ScnBank* bank,
                            const VariantOptions& options) {
  VariantResult result;
  if (variant == DatasetVariant::original) {
    result.manifest = manifest;
    return result;
  }
  if (variant == DatasetVariant::b_super_resolved && bank == nullptr) {
    throw ContractError("b_super_resolved needs trained SR parameters");
  }
  const auto source_root = options.source_root.empty() ? common_root(manifest) : options.source_root;
  auto out_root = options.out_root;
  if (out_root.empty()) out_root = source_root.string() + "_" + std::string(to_string(variant));

  std::vector<SampleRecord> records;
  for (const auto& r : manifest.records()) {
    const bool halve = variant == DatasetVariant::a_halved && r.source == Source::A;
    const bool lift = variant == DatasetVariant::b_super_resolved && r.source == Source::B;
    if (!halve && !lift) {
      records.push_back(r);
      continue;
    }
    try {
      if (lift) {
        const auto size = read_pnm_size(r.image_path);
        if (upscale_factor(size.width, size.height, options.target) == 1) {
          records.push_back(r);
          continue;
        }
      }
      const RasterImage img = read_pnm(r.image_path);
      const RasterImage out = halve ? resize_bicubic(img, std::max<std::size_t>(1, img.width / 2),
                                                     std::max<std::size_t>(1, img.height / 2))
                                    : lift_to_target(img, *bank, options.target);
      const auto dest = mirrored(r.image_path, source_root, out_root);
      write_pnm(dest, out);
      ++result.written;
      SampleRecord moved = r;
      moved.image_path = dest.string();
      records.push_back(std::move(moved));
    } catch (const IoError& e) {
      result.errors.emplace_back(e.what());
    } catch (const ValidationError& e) {
      result.errors.emplace_back(e.what());
    }
  }
  result.manifest = Manifest(std::move(records), manifest.qualify_by_source());
  return result;
}

}  // namespace dietnet
