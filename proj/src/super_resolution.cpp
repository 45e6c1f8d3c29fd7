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

#include "dietnet/super_resolution.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "dietnet/checkpoint.hpp"
#include "dietnet/errors.hpp"
#include "dietnet/graph.hpp"
#include "dietnet/rng.hpp"

namespace dietnet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                                                      static_cast<Eigen::Index>(t.dim(1))); }

void shrink_rows(Eigen::MatrixXd& a, const Tensor& theta) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double t = theta[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = soft_threshold(a(i, j), t);
  }
}

// Codes for the columns of x (already centred), one column per patch.
Eigen::MatrixXd encode_columns(const ScnParams& p, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd a = as_matrix(p.encode) * x;
  Eigen::MatrixXd z = a;
  shrink_rows(z, p.theta);
  const auto s = as_matrix(p.recurrent);
  for (std::size_t t = 0; t < p.iterations; ++t) {
    Eigen::MatrixXd next = a + s * z;
    shrink_rows(next, p.theta);
    z = std::move(next);
  }
  return z;
}

// Centred LR patches as columns plus the per-patch means.
void centre_columns(std::span<const PatchPair> pairs, std::size_t lr_len, Eigen::MatrixXd& x, Eigen::VectorXd& mean) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  x.resize(static_cast<Eigen::Index>(lr_len), n);
  mean.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& lr = pairs[static_cast<std::size_t>(j)].lr;
    const double m = std::accumulate(lr.begin(), lr.end(), 0.0) / static_cast<double>(lr.size());
    mean(j) = m;
    for (std::size_t i = 0; i < lr_len; ++i) x(static_cast<Eigen::Index>(i), j) = lr[i] - m;
  }
}

void check_pairs(std::span<const PatchPair> pairs, std::size_t patch_size, std::size_t factor) {
  if (pairs.empty()) throw ContractError("SCN training needs at least one patch pair");
  const std::size_t lr_len = patch_size * patch_size;
  const std::size_t hr_len = lr_len * factor * factor;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].lr.size() != lr_len || pairs[i].hr.size() != hr_len) {
      throw ContractError(fmt::format("patch pair {} has sizes {}/{}, expected {}/{}", i, pairs[i].lr.size(),
                                      pairs[i].hr.size(), lr_len, hr_len));
    }
  }
}

double mean_squared(const Eigen::MatrixXd& diff) { return diff.squaredNorm() / static_cast<double>(diff.size()); }

Eigen::MatrixXd hr_targets(std::span<const PatchPair> pairs) {
  const auto hr_len = static_cast<Eigen::Index>(pairs.front().hr.size());
  Eigen::MatrixXd y(hr_len, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    for (Eigen::Index i = 0; i < hr_len; ++i) y(i, static_cast<Eigen::Index>(j)) = pairs[j].hr[static_cast<std::size_t>(i)];
  }
  return y;
}

// Bicubic patch upscaler as a [(p*f)^2, p*p] matrix.
RowMat bicubic_matrix(std::size_t patch_size, std::size_t factor) {
  const std::size_t lr_len = patch_size * patch_size, side = patch_size * factor;
  RowMat b(static_cast<Eigen::Index>(side * side), static_cast<Eigen::Index>(lr_len));
  for (std::size_t j = 0; j < lr_len; ++j) {
    Plane basis(patch_size, patch_size);
    basis.values[j] = 1.0;
    const Plane up = resize_bicubic(basis, side, side);
    for (std::size_t i = 0; i < side * side; ++i) b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = up.values[i];
  }
  return b;
}

Tensor to_tensor(const RowMat& m) {
  Tensor t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  std::copy(m.data(), m.data() + m.size(), t.data().begin());
  return t;
}

}  // namespace

double soft_threshold(double a, double theta) {
  if (!(theta > 0.0)) throw ContractError(fmt::format("soft_threshold needs theta > 0, got {}", theta));
  const double mag = std::abs(a) - theta;
  if (mag <= 0.0) return 0.0;
  return a > 0.0 ? mag : -mag;
}

std::vector<double> soft_threshold(std::span<const double> a, std::span<const double> theta) {
  if (a.size() != theta.size()) {
    throw DimensionError(fmt::format("soft_threshold: {} values vs {} thresholds", a.size(), theta.size()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = soft_threshold(a[i], theta[i]);
  return out;
}

double soft_threshold_ramp_form(double a, double theta) {
  if (!(theta > 0.0)) throw ContractError(fmt::format("soft_threshold needs theta > 0, got {}", theta));
  const double sign = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
  return sign * theta * std::max(std::abs(a) / theta - 1.0, 0.0);
}

double soft_threshold_unit_form(double a, double theta) {
  if (!(theta > 0.0)) throw ContractError(fmt::format("soft_threshold needs theta > 0, got {}", theta));
  return theta * soft_threshold(a / theta, 1.0);
}

// ---------------------------------------------------------------- parameters

void ScnParams::validate() const {
  if (patch_size == 0 || dict_atoms == 0 || factor == 0) throw ContractError("SCN sizes must be positive");
  auto expect = [](const Tensor& t, const Shape& s, const char* what) {
    if (t.shape() != s) {
      throw ContractError(fmt::format("SCN {} has shape {}, expected {}", what, t.empty() ? "[]" : shape_str(t.shape()),
                                      shape_str(s)));
    }
  };
  expect(encode, {dict_atoms, lr_patch_len()}, "encoder");
  expect(recurrent, {dict_atoms, dict_atoms}, "recurrent matrix");
  expect(theta, {dict_atoms}, "thresholds");
  expect(decode, {hr_patch_len(), dict_atoms}, "decoder");
  for (std::size_t i = 0; i < theta.numel(); ++i) {
    if (!(theta[i] > 0.0)) throw ContractError(fmt::format("SCN threshold {} is {}, must be positive", i, theta[i]));
  }
}

std::vector<NamedParameter> scn_to_tensors(const ScnParams& p) {
  return {
      {"scn.meta", Tensor::vector({static_cast<double>(p.patch_size), static_cast<double>(p.dict_atoms),
                                   static_cast<double>(p.factor), static_cast<double>(p.iterations)})},
      {"scn.encode", p.encode},
      {"scn.recurrent", p.recurrent},
      {"scn.theta", p.theta},
      {"scn.decode", p.decode},
  };
}

ScnParams scn_from_tensors(std::span<const NamedParameter> tensors) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& t : tensors) {
      if (t.name == name) return t.tensor;
    }
    throw ValidationError("SCN checkpoint lacks '" + name + "'");
  };
  const Tensor& meta = find("scn.meta");
  if (meta.numel() != 4) throw ValidationError("SCN checkpoint meta must hold 4 values");
  ScnParams p;
  p.patch_size = static_cast<std::size_t>(meta[0]);
  p.dict_atoms = static_cast<std::size_t>(meta[1]);
  p.factor = static_cast<std::size_t>(meta[2]);
  p.iterations = static_cast<std::size_t>(meta[3]);
  p.encode = find("scn.encode");
  p.recurrent = find("scn.recurrent");
  p.theta = find("scn.theta");
  p.decode = find("scn.decode");
  p.validate();
  return p;
}

void save_scn(const std::filesystem::path& path, const ScnParams& params) {
  params.validate();
  save_checkpoint(path, scn_to_tensors(params));
}

ScnParams load_scn(const std::filesystem::path& path) { return scn_from_tensors(load_checkpoint(path)); }

// ---------------------------------------------------------------- inference

std::vector<double> lista_encode(std::span<const double> patch, const ScnParams& params) {
  if (patch.size() != params.lr_patch_len()) {
    throw DimensionError(fmt::format("lista_encode: patch has {} values, params expect {}", patch.size(),
                                     params.lr_patch_len()));
  }
  params.validate();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(patch.size()), 1);
  for (std::size_t i = 0; i < patch.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = patch[i];
  const Eigen::MatrixXd z = encode_columns(params, x);
  return {z.data(), z.data() + z.size()};
}

std::vector<double> scn_reconstruct_patch(std::span<const double> lr_patch, const ScnParams& params) {
  if (lr_patch.size() != params.lr_patch_len()) {
    throw DimensionError(fmt::format("scn_reconstruct_patch: patch has {} values, params expect {}", lr_patch.size(),
                                     params.lr_patch_len()));
  }
  PatchPair pair{{lr_patch.begin(), lr_patch.end()}, {}};
  Eigen::MatrixXd x;
  Eigen::VectorXd mean;
  centre_columns({&pair, 1}, params.lr_patch_len(), x, mean);
  params.validate();
  const Eigen::MatrixXd out = as_matrix(params.decode) * encode_columns(params, x);
  std::vector<double> hr(static_cast<std::size_t>(out.rows()));
  for (std::size_t i = 0; i < hr.size(); ++i) hr[i] = out(static_cast<Eigen::Index>(i), 0) + mean(0);
  return hr;
}

std::vector<double> bicubic_patch(std::span<const double> lr_patch, std::size_t patch_size, std::size_t factor) {
  if (lr_patch.size() != patch_size * patch_size) throw DimensionError("bicubic_patch: patch size mismatch");
  Plane p(patch_size, patch_size);
  std::copy(lr_patch.begin(), lr_patch.end(), p.values.begin());
  return resize_bicubic(p, patch_size * factor, patch_size * factor).values;
}

std::size_t upscale_factor(std::size_t width, std::size_t height, std::size_t target) {
  const std::size_t m = std::max<std::size_t>(std::min(width, height), 1);
  return std::max<std::size_t>(1, (target + m - 1) / m);
}

ScnParams init_scn(std::size_t factor, const ScnConfig& config) {
  if (factor < 1 || config.patch_size == 0 || config.dict_atoms == 0) throw ContractError("init_scn: sizes must be positive");
  if (!(config.initial_theta > 0.0)) throw ContractError("init_scn: initial theta must be positive");
  ScnParams p;
  p.patch_size = config.patch_size;
  p.dict_atoms = config.dict_atoms;
  p.factor = factor;
  p.iterations = config.iterations;
  const std::size_t lr_len = p.lr_patch_len();
  RowMat w = RowMat::Zero(static_cast<Eigen::Index>(p.dict_atoms), static_cast<Eigen::Index>(lr_len));
  for (std::size_t i = 0; i < std::min(p.dict_atoms, lr_len); ++i) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
  p.encode = to_tensor(w);
  p.recurrent = Tensor(Shape{p.dict_atoms, p.dict_atoms});
  p.theta = Tensor(Shape{p.dict_atoms}, config.initial_theta);
  p.decode = to_tensor(bicubic_matrix(p.patch_size, factor) * w.transpose());
  return p;
}

std::vector<PatchPair> make_patch_pairs(std::span<const RasterImage> images, std::size_t factor,
                                        std::size_t patch_size, std::size_t per_image, std::uint64_t seed) {
  if (factor < 2) throw ContractError("make_patch_pairs needs factor >= 2");
  std::vector<PatchPair> pairs;
  const std::size_t side = patch_size * factor;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const auto& img = images[n];
    const std::size_t lw = img.width / factor, lh = img.height / factor;
    if (lw < patch_size || lh < patch_size) continue;
    Plane luma = img.channels == 3 ? rgb_to_ycbcr(img)[0] : channel_plane(img, 0);
    for (auto& v : luma.values) v /= 255.0;
    const Plane lr = resize_bicubic(luma, lw, lh);
    Rng rng = Rng::derive(seed, {n});
    for (std::size_t k = 0; k < per_image; ++k) {
      const std::size_t x = rng.index(lw - patch_size + 1), y = rng.index(lh - patch_size + 1);
      PatchPair pair;
      pair.lr.reserve(patch_size * patch_size);
      pair.hr.reserve(side * side);
      for (std::size_t r = 0; r < patch_size; ++r) {
        for (std::size_t c = 0; c < patch_size; ++c) pair.lr.push_back(lr.at(x + c, y + r));
      }
      for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) pair.hr.push_back(luma.at(x * factor + c, y * factor + r));
      }
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

double scn_loss(std::span<const PatchPair> pairs, const ScnParams& params) {
  params.validate();
  check_pairs(pairs, params.patch_size, params.factor);
  Eigen::MatrixXd x;
  Eigen::VectorXd mean;
  centre_columns(pairs, params.lr_patch_len(), x, mean);
  Eigen::MatrixXd out = as_matrix(params.decode) * encode_columns(params, x);
  out.rowwise() += mean.transpose();
  return mean_squared(out - hr_targets(pairs));
}

double bicubic_loss(std::span<const PatchPair> pairs, std::size_t patch_size, std::size_t factor) {
  check_pairs(pairs, patch_size, factor);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(patch_size * patch_size), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    for (std::size_t i = 0; i < pairs[j].lr.size(); ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pairs[j].lr[i];
  }
  const Eigen::MatrixXd out = bicubic_matrix(patch_size, factor) * x;
  return mean_squared(out - hr_targets(pairs));
}

// ---------------------------------------------------------------- training

ScnTrainResult train_scn(std::span<const PatchPair> pairs, std::size_t factor, std::size_t epochs,
                         const ScnTrainOptions& options) {
  const auto& cfg = options.config;
  check_pairs(pairs, cfg.patch_size, factor);
  ScnTrainResult result{init_scn(factor, cfg), {}};
  result.loss_history.push_back(scn_loss(pairs, result.params));
  if (epochs == 0) return result;

  // Trainable view: thresholds live in log space.
  std::vector<NamedParameter> tp{{"scn.encode", result.params.encode},
                                 {"scn.recurrent", result.params.recurrent},
                                 {"scn.log_theta", Tensor(Shape{cfg.dict_atoms})},
                                 {"scn.decode", result.params.decode}};
  for (std::size_t i = 0; i < cfg.dict_atoms; ++i) tp[2].tensor[i] = std::log(result.params.theta[i]);
  for (auto& p : tp) p.tensor.set_requires_grad(true);

  auto export_params = [&]() {
    ScnParams out = result.params;
    out.encode = Tensor(tp[0].tensor.shape(), tp[0].tensor.values());
    out.recurrent = Tensor(tp[1].tensor.shape(), tp[1].tensor.values());
    out.theta = Tensor(Shape{cfg.dict_atoms});
    for (std::size_t i = 0; i < cfg.dict_atoms; ++i) out.theta[i] = std::exp(tp[2].tensor[i]);
    out.decode = Tensor(tp[3].tensor.shape(), tp[3].tensor.values());
    return out;
  };

  const std::size_t lr_len = cfg.patch_size * cfg.patch_size;
  const std::size_t hr_len = pairs.front().hr.size();
  const std::size_t batch = std::max<std::size_t>(1, std::min(options.batch_size, pairs.size()));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::derive(options.seed, {factor});
  double lr = options.learning_rate;
  AdamState adam;
  double best = result.loss_history.front();

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<Tensor> snapshot;
    for (const auto& p : tp) snapshot.emplace_back(p.tensor.shape(), p.tensor.values());
    const AdamState adam_snapshot = adam;
    rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      std::vector<double> xs(lr_len * n), ys(hr_len * n);
      for (std::size_t b = 0; b < n; ++b) {
        const auto& pr = pairs[order[start + b]];
        const double m = std::accumulate(pr.lr.begin(), pr.lr.end(), 0.0) / static_cast<double>(lr_len);
        for (std::size_t i = 0; i < lr_len; ++i) xs[i * n + b] = pr.lr[i] - m;
        for (std::size_t i = 0; i < hr_len; ++i) ys[i * n + b] = pr.hr[i] - m;
      }
      Graph g;
      const NodeId w = g.parameter(tp[0].tensor, 0);
      const NodeId s = g.parameter(tp[1].tensor, 1);
      const NodeId theta = g.exp(g.parameter(tp[2].tensor, 2));
      const NodeId d = g.parameter(tp[3].tensor, 3);
      const NodeId x = g.constant(Tensor(Shape{lr_len, n}, std::move(xs)));
      const NodeId y = g.constant(Tensor(Shape{hr_len, n}, std::move(ys)));
      const NodeId a = g.matmul(w, x);
      NodeId z = g.soft_threshold(a, theta);
      for (std::size_t t = 0; t < cfg.iterations; ++t) z = g.soft_threshold(g.add(a, g.matmul(s, z)), theta);
      const NodeId loss = g.mse(g.matmul(d, z), y);
      g.backward(loss);
      zero_grads(tp);
      g.accumulate_into(tp);
      adam_step(tp, lr, adam);
    }

    const double loss = scn_loss(pairs, export_params());
    if (std::isfinite(loss) && loss <= best) {
      best = loss;
    } else {
      for (std::size_t i = 0; i < tp.size(); ++i) {
        std::copy(snapshot[i].data().begin(), snapshot[i].data().end(), tp[i].tensor.data().begin());
      }
      adam = adam_snapshot;
      lr *= 0.5;
    }
    result.loss_history.push_back(best);
  }
  result.params = export_params();
  return result;
}

// ---------------------------------------------------------------- images

Plane super_resolve_plane(const Plane& luma, const ScnParams& params) {
  params.validate();
  const std::size_t p = params.patch_size, f = params.factor;
  // Images smaller than one patch are padded by edge replication.
  const std::size_t w = std::max(luma.width, p), h = std::max(luma.height, p);
  Plane src(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) src.at(x, y) = luma.at(std::min(x, luma.width - 1), std::min(y, luma.height - 1)) / 255.0;
  }
  Plane acc(w * f, h * f);
  std::vector<double> count(acc.values.size(), 0.0);
  const std::size_t cols = w - p + 1, side = p * f, lr_len = p * p;
  const auto decode = as_matrix(params.decode);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(lr_len), static_cast<Eigen::Index>(cols));
  Eigen::VectorXd mean(static_cast<Eigen::Index>(cols));
  for (std::size_t y0 = 0; y0 + p <= h; ++y0) {
    for (std::size_t x0 = 0; x0 < cols; ++x0) {
      double m = 0.0;
      for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) m += src.at(x0 + c, y0 + r);
      }
      m /= static_cast<double>(lr_len);
      mean(static_cast<Eigen::Index>(x0)) = m;
      for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
          x(static_cast<Eigen::Index>(r * p + c), static_cast<Eigen::Index>(x0)) = src.at(x0 + c, y0 + r) - m;
        }
      }
    }
    const Eigen::MatrixXd out = decode * encode_columns(params, x);
    for (std::size_t x0 = 0; x0 < cols; ++x0) {
      for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
          const std::size_t idx = (y0 * f + r) * acc.width + x0 * f + c;
          acc.values[idx] += out(static_cast<Eigen::Index>(r * side + c), static_cast<Eigen::Index>(x0)) +
                             mean(static_cast<Eigen::Index>(x0));
          count[idx] += 1.0;
        }
      }
    }
  }
  Plane result(luma.width * f, luma.height * f);
  for (std::size_t y = 0; y < result.height; ++y) {
    for (std::size_t x = 0; x < result.width; ++x) {
      const std::size_t idx = y * acc.width + x;
      result.at(x, y) = std::clamp(255.0 * acc.values[idx] / count[idx], 0.0, 255.0);
    }
  }
  return result;
}

RasterImage super_resolve(const RasterImage& image, std::size_t factor, const ScnParams& params) {
  image.validate();
  if (factor < 2) throw ContractError(fmt::format("super_resolve needs factor >= 2, got {}", factor));
  if (params.factor != factor) {
    throw ContractError(fmt::format("SCN parameters were trained for factor {}, not {}", params.factor, factor));
  }
  const std::size_t w = image.width * factor, h = image.height * factor;
  if (image.channels == 1) return plane_to_gray(super_resolve_plane(channel_plane(image, 0), params));
  const auto ycc = rgb_to_ycbcr(image);
  return ycbcr_to_rgb(super_resolve_plane(ycc[0], params), resize_bicubic(ycc[1], w, h), resize_bicubic(ycc[2], w, h));
}

void ScnBank::add(ScnParams params) {
  params.validate();
  const std::size_t f = params.factor;
  by_factor_.insert_or_assign(f, std::move(params));
}

const ScnParams& ScnBank::at(std::size_t factor) const {
  auto it = by_factor_.find(factor);
  if (it == by_factor_.end()) throw ContractError(fmt::format("no trained SR parameters for factor {}", factor));
  return it->second;
}

std::vector<std::size_t> ScnBank::factors() const {
  std::vector<std::size_t> out;
  for (const auto& [f, _] : by_factor_) out.push_back(f);
  return out;
}

void ScnBank::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [f, p] : by_factor_) save_scn(dir / fmt::format("scn_x{}.dnt", f), p);
}

ScnBank ScnBank::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("SR parameter directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.starts_with("scn_x") && e.path().extension() == ".dnt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ScnBank bank;
  for (const auto& f : files) bank.add(load_scn(f));
  return bank;
}

RasterImage lift_to_target(const RasterImage& image, const ScnBank& bank, std::size_t target) {
  const std::size_t f = upscale_factor(image.width, image.height, target);
  if (f == 1) return image;
  return super_resolve(image, f, bank.at(f));
}

SrRoundtrip simulate_sr_roundtrip(const RasterImage& image, double shrink, const ScnBank& bank, std::size_t target) {
  if (!(shrink > 0.0 && shrink < 1.0)) throw ContractError(fmt::format("shrink must lie in (0, 1), got {}", shrink));
  SrRoundtrip r;
  r.shrunk_width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(image.width) * shrink)));
  r.shrunk_height = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(image.height) * shrink)));
  const RasterImage shrunk = resize_bicubic(image, r.shrunk_width, r.shrunk_height);
  r.factor = upscale_factor(r.shrunk_width, r.shrunk_height, target);
  const RasterImage lifted = r.factor == 1 ? shrunk : super_resolve(shrunk, r.factor, bank.at(r.factor));
  r.lifted_width = lifted.width;
  r.lifted_height = lifted.height;
  r.plain = resize_bicubic(image, target, target);
  r.restored = resize_bicubic(lifted, target, target);
  return r;
}

}  // namespace dietnet
