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

#include "dietnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <string>

#include "dietnet/errors.hpp"

namespace dietnet {

RasterImage::RasterImage(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill)
    : width(w), height(h), channels(c), pixels(w * h * c, fill) {
  validate();
}

void RasterImage::validate() const {
  if (width == 0 || height == 0) throw ValidationError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ValidationError(fmt::format("images have 1 or 3 channels, not {}", channels));
  if (pixels.size() != width * height * channels) {
    throw ValidationError(fmt::format("{}x{}x{} image carries {} samples", width, height, channels, pixels.size()));
  }
}

// ---------------------------------------------------------------- PNM codec

namespace {

struct PnmHeader {
  char kind = '6';
  std::size_t width = 0, height = 0, maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
    throw ValidationError("not a binary PPM/PGM file (expected P6 or P5 magic)");
  }
  PnmHeader h;
  h.kind = static_cast<char>(bytes[1]);
  std::size_t pos = 2;
  auto next_number = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw ValidationError("malformed PNM header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > (1u << 28)) throw ValidationError("PNM header value too large");
      ++pos;
    }
    return v;
  };
  h.width = next_number();
  h.height = next_number();
  h.maxval = next_number();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ValidationError("malformed PNM header");
  h.data_offset = pos + 1;  // exactly one whitespace byte before the raster
  if (h.width == 0 || h.height == 0) throw ValidationError("PNM image with zero extent");
  if (h.maxval != 255) throw ValidationError(fmt::format("only 8-bit PNM (maxval 255) is supported, got {}", h.maxval));
  return h;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<std::uint8_t> encode_pnm(const RasterImage& image) {
  image.validate();
  const std::string header = fmt::format("P{}\n{} {}\n255\n", image.channels == 3 ? 6 : 5, image.width, image.height);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
  const auto h = parse_pnm_header(bytes);
  RasterImage img;
  img.width = h.width;
  img.height = h.height;
  img.channels = h.kind == '6' ? 3 : 1;
  const std::size_t n = img.width * img.height * img.channels;
  if (bytes.size() - h.data_offset < n) throw ValidationError("PNM raster truncated");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset + n));
  return img;
}

RasterImage read_pnm(const std::filesystem::path& path) {
  try {
    return decode_pnm(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_pnm(const std::filesystem::path& path, const RasterImage& image) {
  const auto bytes = encode_pnm(image);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

ImageSize read_pnm_size(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> head(512);
  f.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(f.gcount()));
  try {
    const auto h = parse_pnm_header(head);
    return {h.width, h.height};
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- resampling

namespace {

double cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Tap {
  std::size_t index;
  double weight;
};

// Per output sample, the in-range source taps and their normalised weights.
// Taps falling outside the image are dropped rather than edge-replicated.
std::vector<std::vector<Tap>> resample_taps(std::size_t src, std::size_t dst) {
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double stretch = std::max(scale, 1.0);
  const double support = 2.0 * stretch;
  std::vector<std::vector<Tap>> taps(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    const double center = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(center - support)));
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(src) - 1,
                                             static_cast<std::ptrdiff_t>(std::ceil(center + support)));
    double total = 0.0;
    auto& row = taps[i];
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double w = cubic((static_cast<double>(j) - center) / stretch);
      if (w == 0.0) continue;
      row.push_back({static_cast<std::size_t>(j), w});
      total += w;
    }
    for (auto& t : row) t.weight /= total;
  }
  return taps;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

Plane resize_bicubic(const Plane& src, std::size_t width, std::size_t height) {
  if (src.width == 0 || src.height == 0 || width == 0 || height == 0) {
    throw ContractError("resize_bicubic needs positive source and target sizes");
  }
  const auto xt = resample_taps(src.width, width);
  const auto yt = resample_taps(src.height, height);
  Plane tmp(width, src.height);
  for (std::size_t y = 0; y < src.height; ++y) {
    const double* row = src.values.data() + y * src.width;
    for (std::size_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (const auto& t : xt[x]) acc += t.weight * row[t.index];
      tmp.at(x, y) = acc;
    }
  }
  Plane out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (const auto& t : yt[y]) acc += t.weight * tmp.at(x, t.index);
      out.at(x, y) = acc;
    }
  }
  return out;
}

RasterImage resize_bicubic(const RasterImage& src, std::size_t width, std::size_t height) {
  src.validate();
  RasterImage out(width, height, src.channels);
  for (std::size_t c = 0; c < src.channels; ++c) {
    const Plane p = resize_bicubic(channel_plane(src, c), width, height);
    for (std::size_t i = 0; i < width * height; ++i) out.pixels[i * src.channels + c] = to_byte(p.values[i]);
  }
  return out;
}

Plane channel_plane(const RasterImage& image, std::size_t channel) {
  if (channel >= image.channels) throw IndexError(fmt::format("channel {} of a {}-channel image", channel, image.channels));
  Plane p(image.width, image.height);
  for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = image.pixels[i * image.channels + channel];
  return p;
}

RasterImage plane_to_gray(const Plane& plane) {
  RasterImage img(plane.width, plane.height, 1);
  for (std::size_t i = 0; i < plane.values.size(); ++i) img.pixels[i] = to_byte(plane.values[i]);
  return img;
}

std::array<Plane, 3> rgb_to_ycbcr(const RasterImage& rgb) {
  if (rgb.channels != 3) throw ContractError("rgb_to_ycbcr needs a 3-channel image");
  std::array<Plane, 3> out{Plane(rgb.width, rgb.height), Plane(rgb.width, rgb.height), Plane(rgb.width, rgb.height)};
  for (std::size_t i = 0; i < rgb.width * rgb.height; ++i) {
    const double r = rgb.pixels[3 * i], g = rgb.pixels[3 * i + 1], b = rgb.pixels[3 * i + 2];
    out[0].values[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    out[1].values[i] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    out[2].values[i] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
  }
  return out;
}

RasterImage ycbcr_to_rgb(const Plane& y, const Plane& cb, const Plane& cr) {
  RasterImage out(y.width, y.height, 3);
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const double yy = y.values[i], u = cb.values[i] - 128.0, v = cr.values[i] - 128.0;
    out.pixels[3 * i] = to_byte(yy + 1.402 * v);
    out.pixels[3 * i + 1] = to_byte(yy - 0.344136 * u - 0.714136 * v);
    out.pixels[3 * i + 2] = to_byte(yy + 1.772 * u);
  }
  return out;
}

std::vector<Histogram> histogram(const RasterImage& image) {
  image.validate();
  std::vector<Histogram> h(image.channels);
  for (auto& bins : h) bins.fill(0);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) ++h[i % image.channels][image.pixels[i]];
  return h;
}

double histogram_distance(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) {
    throw ContractError(fmt::format("histogram_distance: {} bins vs {} bins", a.size(), b.size()));
  }
  double ta = 0.0, tb = 0.0;
  for (auto v : a) ta += static_cast<double>(v);
  for (auto v : b) tb += static_cast<double>(v);
  if (ta == 0.0 || tb == 0.0) throw ContractError("histogram_distance: empty histogram");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(static_cast<double>(a[i]) / ta - static_cast<double>(b[i]) / tb);
  return d;
}

double psnr(std::span<const double> reference, std::span<const double> test, double peak) {
  if (reference.size() != test.size() || reference.empty()) throw ContractError("psnr: mismatched or empty signals");
  double mse = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) mse += (reference[i] - test[i]) * (reference[i] - test[i]);
  mse /= static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace dietnet
