// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>

#include "ssi/tensor.hpp"

namespace ssi::nn {

/// Patch matrix for a 3x3 convolution with zero padding 1. Row (k * C + c)
/// holds channel c at kernel tap k = ky * 3 + kx; one column per output pixel.
inline Matrix im2col3x3(const FeatureMap& in, int stride, int& out_h, int& out_w) {
  const int C = in.channels();
  out_h = (in.height + stride - 1) / stride;
  out_w = (in.width + stride - 1) / stride;
  Matrix cols = Matrix::Zero(9 * C, out_h * out_w);
  const float* src = in.data.data();
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      float* dst = cols.col(oy * out_w + ox).data();
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = oy * stride + ky - 1;
        if (iy < 0 || iy >= in.height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = ox * stride + kx - 1;
          if (ix < 0 || ix >= in.width) continue;
          const float* pix = src + static_cast<std::ptrdiff_t>(iy * in.width + ix) * C;
          std::copy(pix, pix + C, dst + (ky * 3 + kx) * C);
        }
      }
    }
  }
  return cols;
}

struct Conv3x3 {
  Matrix weight;          // out x (9 * in)
  Eigen::VectorXf bias;   // empty for bias-free layers
  int stride = 1;

  int in_channels() const { return static_cast<int>(weight.cols() / 9); }
  int out_channels() const { return static_cast<int>(weight.rows()); }

  FeatureMap operator()(const FeatureMap& in) const {
    if (in.channels() != in_channels())
      throw ShapeError("conv3x3: expected " + std::to_string(in_channels()) + " input channels, got " +
                       std::to_string(in.channels()));
    int h = 0, w = 0;
    const Matrix cols = im2col3x3(in, stride, h, w);
    Matrix out = weight * cols;
    if (bias.size() > 0) out.colwise() += bias;
    return FeatureMap(h, w, std::move(out));
  }
};

/// He-style initialisation scaled by `gain`.
inline Conv3x3 make_conv3x3(int in, int out, int stride, bool with_bias, float gain, Rng& rng) {
  Conv3x3 conv;
  conv.weight = random_normal(out, 9 * in, gain / std::sqrt(9.0f * static_cast<float>(in)), rng);
  if (with_bias) conv.bias = Eigen::VectorXf::Zero(out);
  conv.stride = stride;
  return conv;
}

inline Matrix make_linear(int in, int out, float gain, Rng& rng) {
  return random_normal(out, in, gain / std::sqrt(static_cast<float>(in)), rng);
}

inline void silu_inplace(Matrix& m) {
  m.array() = m.array() / (1.0f + (-m.array()).exp());
}

inline void relu_inplace(Matrix& m) { m = m.cwiseMax(0.0f); }

/// Normalise every pixel's channel vector to zero mean and unit variance.
inline Matrix layer_norm_columns(const Matrix& x, float eps = 1e-5f) {
  const float inv_c = 1.0f / static_cast<float>(x.rows());
  const RowVector mean = x.colwise().sum() * inv_c;
  Matrix centered = x.rowwise() - mean;
  const RowVector var = centered.array().square().colwise().sum() * inv_c;
  const RowVector scale = (var.array() + eps).rsqrt();
  return centered.array().rowwise() * scale.array();
}

inline FeatureMap upsample2x(const FeatureMap& in) {
  FeatureMap out(in.channels(), in.height * 2, in.width * 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.data.col(y * out.width + x) = in.data.col((y / 2) * in.width + x / 2);
  return out;
}

inline FeatureMap avg_pool(const FeatureMap& in, int factor) {
  if (factor == 1) return in;
  if (in.height % factor != 0 || in.width % factor != 0)
    throw ShapeError("avg_pool: size not divisible by factor");
  FeatureMap out(in.channels(), in.height / factor, in.width / factor);
  const float inv = 1.0f / static_cast<float>(factor * factor);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x)
      out.data.col((y / factor) * out.width + x / factor) += in.data.col(y * in.width + x);
  out.data *= inv;
  return out;
}

inline FeatureMap concat_channels(std::initializer_list<const FeatureMap*> parts) {
  int channels = 0;
  const FeatureMap& first = **parts.begin();
  for (const auto* p : parts) {
    if (p->height != first.height || p->width != first.width)
      throw ShapeError("concat_channels: spatial sizes differ");
    channels += p->channels();
  }
  FeatureMap out(channels, first.height, first.width);
  int row = 0;
  for (const auto* p : parts) {
    out.data.middleRows(row, p->channels()) = p->data;
    row += p->channels();
  }
  return out;
}

/// Sinusoidal embedding of a continuous noise level u in [0,1].
inline Eigen::VectorXf timestep_embedding(double u, int dim) {
  Eigen::VectorXf e(dim);
  const int half = dim / 2;
  const double t = 1000.0 * u;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    e(i) = static_cast<float>(std::sin(t * freq));
    e(half + i) = static_cast<float>(std::cos(t * freq));
  }
  return e;
}

}  // namespace ssi::nn
