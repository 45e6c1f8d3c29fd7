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
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dietnet {

/// 8-bit raster, row-major, channels interleaved (RGB or gray).
struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0);

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

  /// Throws ValidationError unless the sample count matches the geometry.
  void validate() const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Single-channel floating point image, row-major.
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}

  double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

struct ImageSize {
  std::size_t width = 0;
  std::size_t height = 0;
};

// Binary PPM (P6, RGB) and PGM (P5, gray), maxval 255.
std::vector<std::uint8_t> encode_pnm(const RasterImage& image);
RasterImage decode_pnm(std::span<const std::uint8_t> bytes);
RasterImage read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const RasterImage& image);
/// Reads only the header.
ImageSize read_pnm_size(const std::filesystem::path& path);

/// Separable bicubic (Keys, a = -0.5) resampling with pixel-center alignment.
/// When shrinking, the kernel is stretched by the scale factor so the result
/// is low-pass filtered rather than aliased.
Plane resize_bicubic(const Plane& src, std::size_t width, std::size_t height);
RasterImage resize_bicubic(const RasterImage& src, std::size_t width, std::size_t height);

// Full-range BT.601 (JPEG) YCbCr on a 0..255 scale.
std::array<Plane, 3> rgb_to_ycbcr(const RasterImage& rgb);
RasterImage ycbcr_to_rgb(const Plane& y, const Plane& cb, const Plane& cr);

Plane channel_plane(const RasterImage& image, std::size_t channel);
RasterImage plane_to_gray(const Plane& plane);

using Histogram = std::array<std::size_t, 256>;

/// One 256-bin histogram per channel.
std::vector<Histogram> histogram(const RasterImage& image);

/// L1 distance between the count-normalised histograms, in [0, 2]. Both must
/// have the same number of bins.
double histogram_distance(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Peak signal-to-noise ratio for signals with the given peak value.
double psnr(std::span<const double> reference, std::span<const double> test, double peak);

}  // namespace dietnet
