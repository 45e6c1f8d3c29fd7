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

#include <array>
#include <cstddef>
#include <span>

#include "dietnet/image.hpp"
#include "dietnet/tensor.hpp"

namespace dietnet {

class Rng;

struct SampleOptions {
  std::size_t resize = 256;
  std::size_t crop = 224;
  std::array<double, 3> mean{0.0, 0.0, 0.0};  // per channel, on the [0, 1] scale
};

struct CropOffset {
  std::size_t x = 0, y = 0;
};

/// Resizes (bicubic) to resize x resize unless already that size. Gray
/// images are expanded to three channels.
RasterImage unify_resolution(const RasterImage& image, std::size_t resize);

/// Random crop of an image already at the unified resolution, scaled to
/// [0, 1] with the channel mean removed. Returns a [3, crop, crop] tensor.
Tensor crop_to_tensor(const RasterImage& unified, const SampleOptions& options, CropOffset offset);

Tensor prepare_train_sample(const RasterImage& image, const SampleOptions& options, Rng& rng,
                            CropOffset* offset = nullptr);
/// Central crop.
Tensor prepare_eval_sample(const RasterImage& image, const SampleOptions& options);

/// Channel means of unified images on the [0, 1] scale.
std::array<double, 3> channel_means(std::span<const RasterImage> unified);

}  // namespace dietnet
