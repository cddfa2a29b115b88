// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "ssi/autoencoder.hpp"
#include "ssi/tensor.hpp"

namespace ssi {

// Seeded procedural images: geometric "content" scenes and textured "style"
// images.

namespace procedural {

using Color = std::array<float, 3>;

inline Color random_color(Rng& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  return {u(rng), u(rng), u(rng)};
}

inline void set_pixel(Image& img, int y, int x, const Color& c) {
  for (int ch = 0; ch < 3; ++ch) img.at(ch, y, x) = c[static_cast<std::size_t>(ch)];
}

inline Color mix(const Color& a, const Color& b, float t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

/// Gradient background with 2-4 filled circles, rectangles or triangles.
inline Image content_scene(Rng& rng, int size = kImageSize) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(3, size, size);
  const Color top = random_color(rng), bottom = random_color(rng);
  const bool vertical = u(rng) < 0.5f;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      set_pixel(img, y, x, mix(top, bottom, static_cast<float>(vertical ? y : x) / static_cast<float>(size - 1)));

  const int shapes = 2 + static_cast<int>(u(rng) * 3.0f) % 3;
  for (int s = 0; s < shapes; ++s) {
    const Color c = random_color(rng);
    const int kind = static_cast<int>(u(rng) * 3.0f) % 3;
    const float cx = (0.15f + 0.7f * u(rng)) * static_cast<float>(size);
    const float cy = (0.15f + 0.7f * u(rng)) * static_cast<float>(size);
    const float r = (0.1f + 0.15f * u(rng)) * static_cast<float>(size);
    const float r2 = (0.1f + 0.15f * u(rng)) * static_cast<float>(size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const float dx = static_cast<float>(x) + 0.5f - cx, dy = static_cast<float>(y) + 0.5f - cy;
        bool inside = false;
        if (kind == 0) {
          inside = dx * dx + dy * dy <= r * r;
        } else if (kind == 1) {
          inside = std::abs(dx) <= r && std::abs(dy) <= r2;
        } else {
          // Upward triangle with apex at (cx, cy - r) and base at cy + r.
          inside = dy >= -r && dy <= r && std::abs(dx) <= (dy + r) * 0.6f;
        }
        if (inside) set_pixel(img, y, x, c);
      }
    }
  }
  return img;
}

enum class TextureKind { stripes = 0, noise_field = 1, stippling = 2 };
inline constexpr int kNumTextureKinds = 3;

inline std::string_view to_string(TextureKind k) {
  switch (k) {
    case TextureKind::stripes: return "stripes";
    case TextureKind::noise_field: return "noise";
    case TextureKind::stippling: return "stipple";
  }
  return "?";
}

inline float smoothstep(float t) { return t * t * (3.0f - 2.0f * t); }

/// Smooth value noise in [0,1] on a `cells` x `cells` lattice.
inline std::vector<float> value_noise(Rng& rng, int size, int cells) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> lattice(static_cast<std::size_t>((cells + 1) * (cells + 1)));
  for (auto& v : lattice) v = u(rng);
  auto L = [&](int gy, int gx) { return lattice[static_cast<std::size_t>(gy * (cells + 1) + gx)]; };
  std::vector<float> out(static_cast<std::size_t>(size * size));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float fy = static_cast<float>(y) / static_cast<float>(size) * static_cast<float>(cells);
      const float fx = static_cast<float>(x) / static_cast<float>(size) * static_cast<float>(cells);
      const int gy = static_cast<int>(fy), gx = static_cast<int>(fx);
      const float ty = smoothstep(fy - static_cast<float>(gy)), tx = smoothstep(fx - static_cast<float>(gx));
      const float top = L(gy, gx) + (L(gy, gx + 1) - L(gy, gx)) * tx;
      const float bot = L(gy + 1, gx) + (L(gy + 1, gx + 1) - L(gy + 1, gx)) * tx;
      out[static_cast<std::size_t>(y * size + x)] = top + (bot - top) * ty;
    }
  }
  return out;
}

inline Image style_texture(Rng& rng, TextureKind kind, int size = kImageSize) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(3, size, size);
  const Color a = random_color(rng), b = random_color(rng), c = random_color(rng);
  switch (kind) {
    case TextureKind::stripes: {
      const float angle = u(rng) * std::numbers::pi_v<float>;
      const float freq = 3.0f + 6.0f * u(rng);
      const float ca = std::cos(angle), sa = std::sin(angle);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const float p = (ca * static_cast<float>(x) + sa * static_cast<float>(y)) / static_cast<float>(size);
          const float s = 0.5f + 0.5f * std::sin(2.0f * std::numbers::pi_v<float> * freq * p);
          const float s2 = 0.5f + 0.5f * std::sin(2.0f * std::numbers::pi_v<float> * freq * 2.0f * p + 1.0f);
          set_pixel(img, y, x, mix(mix(a, b, s), c, 0.3f * s2));
        }
      break;
    }
    case TextureKind::noise_field: {
      const auto coarse = value_noise(rng, size, 4);
      const auto fine = value_noise(rng, size, 16);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const auto i = static_cast<std::size_t>(y * size + x);
          set_pixel(img, y, x, mix(mix(a, b, coarse[i]), c, fine[i] * 0.6f));
        }
      break;
    }
    case TextureKind::stippling: {
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) set_pixel(img, y, x, a);
      const int dots = 120 + static_cast<int>(u(rng) * 120.0f);
      for (int d = 0; d < dots; ++d) {
        const float cx = u(rng) * static_cast<float>(size), cy = u(rng) * static_cast<float>(size);
        const float r = 0.8f + 1.8f * u(rng);
        const Color& dc = u(rng) < 0.6f ? b : c;
        for (int y = std::max(0, static_cast<int>(cy - r - 1)); y < std::min(size, static_cast<int>(cy + r + 2)); ++y)
          for (int x = std::max(0, static_cast<int>(cx - r - 1)); x < std::min(size, static_cast<int>(cx + r + 2)); ++x) {
            const float dx = static_cast<float>(x) + 0.5f - cx, dy = static_cast<float>(y) + 0.5f - cy;
            if (dx * dx + dy * dy <= r * r) set_pixel(img, y, x, dc);
          }
      }
      break;
    }
  }
  return img;
}

}  // namespace procedural

/// Procedural content x style benchmark; pair (i, j) is content i with style j.
struct Benchmark {
  std::vector<Image> contents;
  std::vector<Image> styles;

  std::size_t pair_count() const { return contents.size() * styles.size(); }

  static std::string pair_id(std::size_t content, std::size_t style) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%03zu_s%03zu", content, style);
    return buf;
  }
};

inline Image benchmark_content(std::uint64_t seed, std::size_t index) {
  Rng rng(splitmix64(derive_seed(seed, SeedStream::benchmark) ^ (2 * index)));
  return procedural::content_scene(rng);
}

inline Image benchmark_style(std::uint64_t seed, std::size_t index) {
  Rng rng(splitmix64(derive_seed(seed, SeedStream::benchmark) ^ (2 * index + 1)));
  return procedural::style_texture(
      rng, static_cast<procedural::TextureKind>(index % procedural::kNumTextureKinds));
}

inline Benchmark make_benchmark(std::uint64_t seed, int n_content, int n_style) {
  if (n_content < 0 || n_style < 0) throw ParameterError("benchmark: negative image count");
  Benchmark b;
  for (int i = 0; i < n_content; ++i) b.contents.push_back(benchmark_content(seed, static_cast<std::size_t>(i)));
  for (int j = 0; j < n_style; ++j) b.styles.push_back(benchmark_style(seed, static_cast<std::size_t>(j)));
  return b;
}

}  // namespace ssi
