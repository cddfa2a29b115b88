// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssi/autoencoder.hpp"
#include "ssi/denoiser.hpp"
#include "ssi/nn.hpp"
#include "ssi/schedule.hpp"
#include "ssi/style_injection.hpp"

namespace ssi {

enum class StructureKind { edge, depth };

inline std::string_view to_string(StructureKind k) { return k == StructureKind::edge ? "edge" : "depth"; }

inline StructureKind parse_structure_kind(std::string_view s) {
  if (s == "edge") return StructureKind::edge;
  if (s == "depth") return StructureKind::depth;
  throw ParameterError("unknown conditioning kind '" + std::string(s) + "'");
}

/// Single-channel structure map at latent resolution, values in [0,1].
struct StructureMap {
  FeatureMap map;
  StructureKind kind = StructureKind::depth;
};

namespace detail {

inline Matrix luminance(const Image& img) {
  Matrix lum(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      lum(y, x) = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) + 0.114f * img.at(2, y, x);
  return lum;
}

inline float clamped(const Matrix& m, int y, int x) {
  return m(std::clamp(y, 0, static_cast<int>(m.rows()) - 1), std::clamp(x, 0, static_cast<int>(m.cols()) - 1));
}

inline FeatureMap downsample2x(const Matrix& m) {
  const int h = static_cast<int>(m.rows()) / 2, w = static_cast<int>(m.cols()) / 2;
  FeatureMap out(1, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(0, y, x) = 0.25f * (m(2 * y, 2 * x) + m(2 * y, 2 * x + 1) + m(2 * y + 1, 2 * x) + m(2 * y + 1, 2 * x + 1));
  return out;
}

inline Matrix sobel_magnitude(const Matrix& lum) {
  Matrix mag(lum.rows(), lum.cols());
  for (int y = 0; y < lum.rows(); ++y)
    for (int x = 0; x < lum.cols(); ++x) {
      auto p = [&](int dy, int dx) { return clamped(lum, y + dy, x + dx); };
      const float gx = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      const float gy = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      mag(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

inline Matrix gaussian_blur(const Matrix& m, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += std::exp(-0.5 * i * i / (sigma * sigma));
  for (int i = -radius; i <= radius; ++i)
    k[static_cast<std::size_t>(i + radius)] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)) / sum);
  Matrix tmp(m.rows(), m.cols()), out(m.rows(), m.cols());
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * clamped(m, y, x + i);
      tmp(y, x) = acc;
    }
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * clamped(tmp, y + i, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace detail

/// Edge: Sobel magnitude of luminance (clamped border), 2x2 average
/// downsample, divided by its maximum (all-zero stays zero).
/// Depth proxy: luminance blurred with sigma 2, downsampled, clamped to [0,1].
inline StructureMap extract_structure(const Image& img, StructureKind kind) {
  if (img.channels() != 3 || img.height != kImageSize || img.width != kImageSize)
    throw ShapeError("extract_structure: expected a 3x64x64 image");
  const Matrix lum = detail::luminance(img);
  StructureMap out;
  out.kind = kind;
  if (kind == StructureKind::edge) {
    out.map = detail::downsample2x(detail::sobel_magnitude(lum));
    const float peak = out.map.data.maxCoeff();
    if (peak > 0.0f) out.map.data /= peak;
  } else {
    out.map = detail::downsample2x(detail::gaussian_blur(lum, 2.0));
    out.map.data = out.map.data.cwiseMax(0.0f).cwiseMin(1.0f);
  }
  return out;
}

/// Seeded bias-free conditioning encoder: 3x3 conv (1 -> 8) and ReLU at
/// 32x32, average pooling to each layer's resolution, 1x1 projection to the
/// layer's channel count.
struct CondWeights {
  static constexpr int kHidden = 8;
  std::uint64_t seed = 0;
  nn::Conv3x3 stem;
  std::array<Matrix, kNumDecoderLayers> projections;

  explicit CondWeights(std::uint64_t s = 0) : seed(s) {
    Rng rng(s);
    stem = nn::make_conv3x3(1, kHidden, 1, /*with_bias=*/false, 1.4f, rng);
    for (int label = kFirstDecoderLayer; label <= kLastDecoderLayer; ++label)
      projections[static_cast<std::size_t>(label - kFirstDecoderLayer)] =
          nn::make_linear(kHidden, DenoiserShape::layer(label).channels, 1.0f, rng);
  }
};

/// Residual for decoder layer `layer`, shaped channels x (h * w) of that layer.
inline FeatureMap conditioning_residual(const StructureMap& m, int layer, const CondWeights& w) {
  if (layer < kFirstDecoderLayer || layer > kLastDecoderLayer)
    throw ParameterError("conditioning_residual: unknown layer " + std::to_string(layer));
  if (m.map.channels() != 1 || m.map.height != kLatentSize || m.map.width != kLatentSize)
    throw ShapeError("conditioning_residual: structure map must be 1x32x32");
  FeatureMap hidden = w.stem(m.map);
  nn::relu_inplace(hidden.data);
  const auto shape = DenoiserShape::layer(layer);
  const FeatureMap pooled = nn::avg_pool(hidden, kLatentSize / shape.height);
  return FeatureMap(pooled.height, pooled.width,
                    w.projections[static_cast<std::size_t>(layer - kFirstDecoderLayer)] * pooled.data);
}

inline FeatureMap scaled_residual(const FeatureMap& r, double s) {
  FeatureMap out = r;
  out.data *= static_cast<float>(s);
  return out;
}

struct CondConfig {
  bool enabled = false;
  StructureKind kind = StructureKind::depth;
  double scale_base = 0.25;
  ControlAxis scale_axis = ControlAxis::none;
  Direction scale_direction = Direction::decreasing;
  WarpShape scale_shape = WarpShape::linear;
  std::vector<int> active_layers = all_decoder_layers();

  ControlSpec scale_spec() const { return {scale_base, scale_axis, scale_direction, scale_shape}; }

  bool is_active(int layer) const {
    return std::find(active_layers.begin(), active_layers.end(), layer) != active_layers.end();
  }

  void validate() const {
    if (!(scale_base >= 0.0) || !std::isfinite(scale_base))
      throw ConfigError("cn_scale", "must be a finite value >= 0, got " + std::to_string(scale_base));
    if (scale_axis != ControlAxis::none && scale_base > 1.0)
      throw ConfigError("cn_scale", "scheduled scales must lie in [0,1], got " + std::to_string(scale_base));
    for (int l : active_layers)
      if (l < kFirstDecoderLayer || l > kLastDecoderLayer)
        throw ConfigError("cn_layers", "layer " + std::to_string(l) + " outside 6..11");
  }

  bool operator==(const CondConfig&) const = default;
};

/// Adds s(step, layer) * residual(layer) after attention at active layers;
/// sites with s == 0 are left untouched.
inline std::function<void(const AttentionSite&, Matrix&)> conditioning_hook(
    const CondConfig& cfg, const std::optional<Schedule>& scale_schedule, const StructureMap& map,
    const CondWeights& weights, InstrumentationLog* log = nullptr) {
  cfg.validate();
  std::array<Matrix, kNumDecoderLayers> residuals;
  for (int l : cfg.active_layers)
    residuals[static_cast<std::size_t>(l - kFirstDecoderLayer)] = conditioning_residual(map, l, weights).data;
  const ControlSpec spec = cfg.scale_spec();
  return [cfg, spec, scale_schedule, residuals = std::move(residuals), log](const AttentionSite& site, Matrix& h) {
    if (!cfg.is_active(site.layer)) return;
    const double s = resolve_control(spec, scale_schedule, site.step, site.layer);
    if (log) log->cn_scale.push_back({site.step, site.layer, s, 0.0});
    if (s == 0.0) return;
    h += static_cast<float>(s) * residuals[static_cast<std::size_t>(site.layer - kFirstDecoderLayer)];
  };
}

}  // namespace ssi
