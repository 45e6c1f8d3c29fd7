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

#include "dietnet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "dietnet/errors.hpp"

namespace dietnet::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(fmt::format("{} must have rank {}, got shape {}", what, rank, shape_str(t.shape())));
  }
}

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kh, kw;
  std::size_t out_h, out_w;
  std::size_t stride, padding;

  std::size_t rows() const { return channels * kh * kw; }
  std::size_t cols() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernels, std::size_t stride,
                           std::size_t padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  if (stride == 0) throw ContractError("conv2d stride must be >= 1");
  if (kernels.dim(1) != input.dim(0)) {
    throw DimensionError(fmt::format("conv2d channel mismatch: input {} vs kernels {}",
                                     shape_str(input.shape()), shape_str(kernels.shape())));
  }
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), kernels.dim(2), kernels.dim(3), 0, 0,
                 stride, padding};
  g.out_h = pooled_extent(g.height, g.kh, stride, padding);
  g.out_w = pooled_extent(g.width, g.kw, stride, padding);
  return g;
}

// col[(c*kh + i)*kw + j, oy*out_w + ox] = input[c, oy*s + i - p, ox*s + j - p]
RowMatrix im2col(const Tensor& input, const ConvGeometry& g) {
  RowMatrix col = RowMatrix::Zero(static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
  const auto* src = input.data().data();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* row = col.data() + ((c * g.kh + i) * g.kw + j) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.padding);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) continue;
          const double* src_row = src + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.padding);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.width)) continue;
            row[oy * g.out_w + ox] = src_row[x];
          }
        }
      }
    }
  }
  return col;
}

void col2im(const RowMatrix& col, const ConvGeometry& g, Tensor& out) {
  auto* dst = out.data().data();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* row = col.data() + ((c * g.kh + i) * g.kw + j) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.padding);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) continue;
          double* dst_row = dst + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.padding);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.width)) continue;
            dst_row[x] += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t pooled_extent(std::size_t extent, std::size_t window, std::size_t stride,
                          std::size_t padding) {
  if (window == 0) throw ContractError("window must be >= 1");
  if (stride == 0) throw ContractError("stride must be >= 1");
  if (window > extent + 2 * padding) {
    throw DimensionError(fmt::format("window {} larger than padded extent {} (extent {}, padding {})",
                                     window, extent + 2 * padding, extent, padding));
  }
  return (extent + 2 * padding - window) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  const auto g = conv_geometry(input, kernels, stride, padding);
  const std::size_t out_c = kernels.dim(0);
  if (bias.numel() != out_c) {
    throw DimensionError(fmt::format("conv2d bias {} does not match {} output channels",
                                     shape_str(bias.shape()), out_c));
  }
  const RowMatrix col = im2col(input, g);
  Tensor out(Shape{out_c, g.out_h, g.out_w});
  MatrixMap o(out.data().data(), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(g.cols()));
  ConstMatrixMap k(kernels.data().data(), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(g.rows()));
  o.noalias() = k * col;
  for (std::size_t c = 0; c < out_c; ++c) o.row(static_cast<Eigen::Index>(c)).array() += bias[c];
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                            std::size_t stride, std::size_t padding, bool need_input_grad) {
  const auto g = conv_geometry(input, kernels, stride, padding);
  const std::size_t out_c = kernels.dim(0);
  if (grad_out.shape() != Shape{out_c, g.out_h, g.out_w}) {
    throw DimensionError("conv2d_backward: gradient shape " + shape_str(grad_out.shape()) +
                         " does not match the forward output");
  }
  const RowMatrix col = im2col(input, g);
  ConstMatrixMap dout(grad_out.data().data(), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(g.cols()));
  ConstMatrixMap k(kernels.data().data(), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(g.rows()));

  Conv2dGrads grads{Tensor(input.shape()), Tensor(kernels.shape()), Tensor(Shape{out_c})};
  MatrixMap dk(grads.kernels.data().data(), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(g.rows()));
  dk.noalias() = dout * col.transpose();
  for (std::size_t c = 0; c < out_c; ++c) grads.bias[c] = dout.row(static_cast<Eigen::Index>(c)).sum();
  if (need_input_grad) {
    RowMatrix dcol = k.transpose() * dout;
    col2im(dcol, g, grads.input);
  }
  return grads;
}

MaxPoolResult maxpool2d(const Tensor& input, std::size_t window, std::size_t stride,
                        std::size_t padding) {
  require_rank(input, 3, "maxpool2d input");
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t out_h = pooled_extent(height, window, stride, padding);
  const std::size_t out_w = pooled_extent(width, window, stride, padding);

  MaxPoolResult r{Tensor(Shape{channels, out_h, out_w}), std::vector<std::size_t>(channels * out_h * out_w, kNoIndex)};
  const auto in = input.data();
  std::size_t o = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox, ++o) {
        std::size_t best = kNoIndex;
        double best_value = 0.0;
        // row-major scan with strict '>' keeps the first maximum on ties
        for (std::size_t i = 0; i < window; ++i) {
          const auto y = static_cast<std::ptrdiff_t>(oy * stride + i) - static_cast<std::ptrdiff_t>(padding);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(height)) continue;
          for (std::size_t j = 0; j < window; ++j) {
            const auto x = static_cast<std::ptrdiff_t>(ox * stride + j) - static_cast<std::ptrdiff_t>(padding);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(width)) continue;
            const std::size_t idx = (c * height + static_cast<std::size_t>(y)) * width + static_cast<std::size_t>(x);
            if (best == kNoIndex || in[idx] > best_value) {
              best = idx;
              best_value = in[idx];
            }
          }
        }
        r.output[o] = best == kNoIndex ? 0.0 : best_value;
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor maxpool2d_backward(const Shape& input_shape, std::span<const std::size_t> argmax,
                          const Tensor& grad_out) {
  if (argmax.size() != grad_out.numel()) {
    throw DimensionError("maxpool2d_backward: routing table does not match gradient");
  }
  Tensor grad(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) {
    if (argmax[o] != kNoIndex) grad[argmax[o]] += grad_out[o];
  }
  return grad;
}

Tensor concat_channels(std::span<const Tensor> inputs) {
  if (inputs.empty()) throw ContractError("concat_channels needs at least one input");
  require_rank(inputs[0], 3, "concat_channels input 0");
  const std::size_t height = inputs[0].dim(1), width = inputs[0].dim(2);
  std::size_t channels = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].rank() != 3 || inputs[i].dim(1) != height || inputs[i].dim(2) != width) {
      throw DimensionError(fmt::format("concat_channels: input {} has shape {}, expected [?x{}x{}]", i,
                                       shape_str(inputs[i].shape()), height, width));
    }
    channels += inputs[i].dim(0);
  }
  std::vector<double> data;
  data.reserve(channels * height * width);
  for (const auto& t : inputs) data.insert(data.end(), t.data().begin(), t.data().end());
  return Tensor(Shape{channels, height, width}, std::move(data));
}

Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t count) {
  require_rank(input, 3, "slice_channels input");
  if (count == 0 || begin + count > input.dim(0)) {
    throw IndexError(fmt::format("slice_channels [{}, {}) out of range for {} channels", begin,
                                 begin + count, input.dim(0)));
  }
  const std::size_t plane = input.dim(1) * input.dim(2);
  const auto first = input.data().begin() + static_cast<std::ptrdiff_t>(begin * plane);
  return Tensor(Shape{count, input.dim(1), input.dim(2)},
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * plane)));
}

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(weights, 2, "linear weights");
  const std::size_t k = weights.dim(0), d = weights.dim(1);
  if (input.numel() != d || input.rank() != 1) {
    throw DimensionError(fmt::format("linear: input {} does not match weights {}", shape_str(input.shape()),
                                     shape_str(weights.shape())));
  }
  if (bias.numel() != k) {
    throw DimensionError(fmt::format("linear: bias {} does not match weights {}", shape_str(bias.shape()),
                                     shape_str(weights.shape())));
  }
  Tensor out(Shape{k});
  ConstMatrixMap w(weights.data().data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  Eigen::Map<const Eigen::VectorXd> x(input.data().data(), static_cast<Eigen::Index>(d));
  Eigen::Map<const Eigen::VectorXd> b(bias.data().data(), static_cast<Eigen::Index>(k));
  Eigen::Map<Eigen::VectorXd> y(out.data().data(), static_cast<Eigen::Index>(k));
  y.noalias() = w * x;
  y += b;
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul left operand");
  if (b.rank() != 1 && b.rank() != 2) {
    throw DimensionError("matmul right operand must be rank 1 or 2, got " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1);
  const std::size_t n = b.rank() == 2 ? b.dim(1) : 1;
  if (b.dim(0) != k) {
    throw DimensionError(fmt::format("matmul: {} x {} inner dimensions differ", shape_str(a.shape()),
                                     shape_str(b.shape())));
  }
  Tensor out(b.rank() == 2 ? Shape{m, n} : Shape{m});
  ConstMatrixMap am(a.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  ConstMatrixMap bm(b.data().data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  MatrixMap om(out.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  om.noalias() = am * bm;
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.numel(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 3, "global_avg_pool input");
  const std::size_t channels = input.dim(0), plane = input.dim(1) * input.dim(2);
  Tensor out(Shape{channels});
  for (std::size_t c = 0; c < channels; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += input[c * plane + i];
    out[c] = s / static_cast<double>(plane);
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

double softmax_cross_entropy(const Tensor& logits, std::size_t true_class) {
  if (true_class >= logits.numel()) {
    throw IndexError(fmt::format("true class {} out of range for {} logits", true_class, logits.numel()));
  }
  const auto x = logits.data();
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - m);
  return std::log(z) + m - x[true_class];
}

Tensor soft_threshold(const Tensor& a, const Tensor& theta) {
  const std::size_t k = theta.numel();
  if (a.dim(0) != k || a.rank() > 2) {
    throw DimensionError(fmt::format("soft_threshold: values {} vs thresholds {}", shape_str(a.shape()),
                                     shape_str(theta.shape())));
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!(theta[i] > 0.0)) throw ContractError(fmt::format("soft_threshold: theta[{}] = {} is not positive", i, theta[i]));
  }
  const std::size_t n = a.numel() / k;
  Tensor out(a.shape());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = a[i * n + j];
      const double mag = std::abs(v) - theta[i];
      out[i * n + j] = mag > 0.0 ? std::copysign(mag, v) : 0.0;
    }
  }
  return out;
}

}  // namespace dietnet::ops
