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

#include "dietnet/samples.hpp"

#include <fmt/format.h>

#include "dietnet/errors.hpp"
#include "dietnet/rng.hpp"

namespace dietnet {

RasterImage unify_resolution(const RasterImage& image, std::size_t resize) {
  image.validate();
  RasterImage rgb = image;
  if (image.channels == 1) {
    rgb = RasterImage(image.width, image.height, 3);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
      for (std::size_t c = 0; c < 3; ++c) rgb.pixels[3 * i + c] = image.pixels[i];
    }
  }
  if (rgb.width == resize && rgb.height == resize) return rgb;
  return resize_bicubic(rgb, resize, resize);
}

Tensor crop_to_tensor(const RasterImage& unified, const SampleOptions& options, CropOffset offset) {
  const std::size_t crop = options.crop;
  if (unified.channels != 3 || offset.x + crop > unified.width || offset.y + crop > unified.height) {
    throw ContractError(fmt::format("crop {} at ({}, {}) does not fit a {}x{}x{} image", crop, offset.x, offset.y,
                                    unified.width, unified.height, unified.channels));
  }
  Tensor t(Shape{3, crop, crop});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < crop; ++y) {
      for (std::size_t x = 0; x < crop; ++x) {
        t.at(c, y, x) = unified.at(offset.x + x, offset.y + y, c) / 255.0 - options.mean[c];
      }
    }
  }
  return t;
}

Tensor prepare_train_sample(const RasterImage& image, const SampleOptions& options, Rng& rng, CropOffset* offset) {
  if (options.crop > options.resize) throw ContractError("crop larger than the unified resolution");
  const RasterImage unified = unify_resolution(image, options.resize);
  const std::size_t span = options.resize - options.crop + 1;
  CropOffset o;
  o.x = rng.index(span);
  o.y = rng.index(span);
  if (offset != nullptr) *offset = o;
  return crop_to_tensor(unified, options, o);
}

Tensor prepare_eval_sample(const RasterImage& image, const SampleOptions& options) {
  if (options.crop > options.resize) throw ContractError("crop larger than the unified resolution");
  const std::size_t o = (options.resize - options.crop) / 2;
  return crop_to_tensor(unify_resolution(image, options.resize), options, {o, o});
}

std::array<double, 3> channel_means(std::span<const RasterImage> unified) {
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  std::size_t count = 0;
  for (const auto& img : unified) {
    if (img.channels != 3) throw ContractError("channel_means expects RGB images");
    for (std::size_t i = 0; i < img.width * img.height; ++i) {
      for (std::size_t c = 0; c < 3; ++c) sum[c] += img.pixels[3 * i + c];
    }
    count += img.width * img.height;
  }
  if (count == 0) return sum;
  for (auto& s : sum) s /= 255.0 * static_cast<double>(count);
  return sum;
}

}  // namespace dietnet
