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
#include <map>
#include <span>
#include <vector>

#include "dietnet/image.hpp"
#include "dietnet/optim.hpp"
#include "dietnet/tensor.hpp"

namespace dietnet {

// Soft thresholding h_theta(a) = sign(a) * max(|a| - theta, 0).
double soft_threshold(double a, double theta);
std::vector<double> soft_threshold(std::span<const double> a, std::span<const double> theta);
// The same map written as a scaled ramp and as a rescaled unit shrinkage.
double soft_threshold_ramp_form(double a, double theta);
double soft_threshold_unit_form(double a, double theta);

/// Unrolled LISTA encoder with a linear patch decoder. Patches are luminance
/// values scaled to [0, 1] with the LR patch mean removed before encoding and
/// added back after decoding, so flat regions pass through unchanged.
struct ScnParams {
  std::size_t patch_size = 8;
  std::size_t dict_atoms = 64;
  std::size_t factor = 2;
  std::size_t iterations = 3;
  Tensor encode;     // [atoms, p*p]
  Tensor recurrent;  // [atoms, atoms]
  Tensor theta;      // [atoms], strictly positive
  Tensor decode;     // [(p*factor)^2, atoms]

  std::size_t lr_patch_len() const { return patch_size * patch_size; }
  std::size_t hr_patch_side() const { return patch_size * factor; }
  std::size_t hr_patch_len() const { return hr_patch_side() * hr_patch_side(); }

  /// Throws ContractError when shapes disagree or a threshold is not positive.
  void validate() const;
};

// Checkpoint mapping: scn.encode, scn.recurrent, scn.theta, scn.decode and
// scn.meta = [patch_size, dict_atoms, factor, iterations].
std::vector<NamedParameter> scn_to_tensors(const ScnParams& params);
ScnParams scn_from_tensors(std::span<const NamedParameter> tensors);
void save_scn(const std::filesystem::path& path, const ScnParams& params);
ScnParams load_scn(const std::filesystem::path& path);

/// z0 = h(W x), z_{t+1} = h(W x + S z_t), returns z_k. `patch` is used as given
/// (no centring). Throws DimensionError on a length mismatch.
std::vector<double> lista_encode(std::span<const double> patch, const ScnParams& params);

/// HR patch (row-major, side p*factor) for one LR patch, including centring.
std::vector<double> scn_reconstruct_patch(std::span<const double> lr_patch, const ScnParams& params);

/// Bicubic upscaling of a single isolated patch; the reference the SCN starts from.
std::vector<double> bicubic_patch(std::span<const double> lr_patch, std::size_t patch_size, std::size_t factor);

/// Smallest f >= 1 with f * min(width, height) >= target.
std::size_t upscale_factor(std::size_t width, std::size_t height, std::size_t target = 256);

struct ScnConfig {
  std::size_t patch_size = 8;
  std::size_t dict_atoms = 64;
  std::size_t iterations = 3;
  double initial_theta = 1e-3;
};

/// Starts at the bicubic solution: W is the identity on the first p*p atoms,
/// S = 0 and D maps the codes through the bicubic patch upscaler.
ScnParams init_scn(std::size_t factor, const ScnConfig& config = {});

struct PatchPair {
  std::vector<double> lr;  // p*p, row-major, [0, 1]
  std::vector<double> hr;  // (p*f)^2
};

/// Samples `per_image` aligned pairs from every image: the image luminance is
/// the HR signal, its bicubic downscale by `factor` the LR one.
std::vector<PatchPair> make_patch_pairs(std::span<const RasterImage> images, std::size_t factor,
                                        std::size_t patch_size, std::size_t per_image, std::uint64_t seed);

struct ScnTrainOptions {
  ScnConfig config;
  double learning_rate = 2e-3;
  std::size_t batch_size = 256;
  std::uint64_t seed = 42;
};

struct ScnTrainResult {
  ScnParams params;
  /// loss_history[0] is the loss of the initial parameters, then one entry
  /// per epoch. Non-increasing: an epoch that would raise the loss is rolled
  /// back and the learning rate halved.
  std::vector<double> loss_history;
};

/// Adam on the mean squared HR reconstruction error through the unrolled
/// iterations. Thresholds are trained as log(theta). Throws ContractError on
/// an empty or inconsistent pair set.
ScnTrainResult train_scn(std::span<const PatchPair> pairs, std::size_t factor, std::size_t epochs,
                         const ScnTrainOptions& options = {});

/// Mean squared HR reconstruction error over the pairs.
double scn_loss(std::span<const PatchPair> pairs, const ScnParams& params);
double bicubic_loss(std::span<const PatchPair> pairs, std::size_t patch_size, std::size_t factor);

/// Upscales a [0, 255] luminance plane by params.factor using every LR patch
/// position (stride 1) and averaging the overlaps.
Plane super_resolve_plane(const Plane& luma, const ScnParams& params);

/// Output is exactly factor x the input size. Luminance goes through the SCN,
/// chroma through bicubic. Throws ContractError if the params were built for
/// another factor or factor < 2.
RasterImage super_resolve(const RasterImage& image, std::size_t factor, const ScnParams& params);

/// Trained parameters keyed by upscale factor.
class ScnBank {
 public:
  void add(ScnParams params);
  bool has(std::size_t factor) const { return by_factor_.count(factor) != 0; }
  /// Throws ContractError when no parameters exist for the factor.
  const ScnParams& at(std::size_t factor) const;
  std::vector<std::size_t> factors() const;

  void save(const std::filesystem::path& dir) const;
  static ScnBank load(const std::filesystem::path& dir);

 private:
  std::map<std::size_t, ScnParams> by_factor_;
};

/// Upscales until both sides reach `target`; images already large enough are
/// returned unchanged.
RasterImage lift_to_target(const RasterImage& image, const ScnBank& bank, std::size_t target = 256);

struct SrRoundtrip {
  RasterImage plain;     // original resized to target x target
  RasterImage restored;  // shrink -> SR -> resized to target x target
  std::size_t shrunk_width = 0, shrunk_height = 0;
  std::size_t factor = 1;
  std::size_t lifted_width = 0, lifted_height = 0;
};

/// Requires 0 < shrink < 1.
SrRoundtrip simulate_sr_roundtrip(const RasterImage& image, double shrink, const ScnBank& bank,
                                  std::size_t target = 256);

}  // namespace dietnet
