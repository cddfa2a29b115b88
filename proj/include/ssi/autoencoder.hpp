// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>

#include "ssi/tensor.hpp"

namespace ssi {

inline constexpr int kImageSize = 64;
inline constexpr int kLatentChannels = 4;
inline constexpr int kLatentSize = 32;

/// Fixed linear patch projection standing in for a learned VAE.
///
/// Each 2x2 RGB patch (12 values, centred at 0.5) maps to 4 latent channels
/// through a matrix with orthonormal rows: three rows average one colour
/// channel over the patch, the fourth is a seeded direction orthogonal to
/// them. Decoding applies the transpose, so decode(encode(x)) is the
/// orthogonal projection of x onto that 4-dimensional patch subspace.
class Autoencoder {
 public:
  static constexpr float kLatentScale = 2.0f;

  explicit Autoencoder(std::uint64_t seed) : seed_(seed), proj_(Matrix::Zero(kLatentChannels, 12)) {
    // Patch vector layout: index = c * 4 + dy * 2 + dx.
    for (int c = 0; c < 3; ++c) proj_.block(c, c * 4, 1, 4).setConstant(0.5f);
    Rng rng(seed);
    Eigen::VectorXd v = random_normal(12, 1, 1.0f, rng).cast<double>();
    for (int c = 0; c < 3; ++c) {
      const Eigen::VectorXd basis = proj_.row(c).transpose().cast<double>();
      v -= basis.dot(v) * basis;
    }
    proj_.row(3) = (v / v.norm()).cast<float>().transpose();
  }

  std::uint64_t seed() const { return seed_; }
  const Matrix& projection() const { return proj_; }

  Latent encode(const Image& img) const {
    if (img.channels() != 3 || img.height != kImageSize || img.width != kImageSize)
      throw ShapeError("encode_image: expected a 3x" + std::to_string(kImageSize) + "x" +
                       std::to_string(kImageSize) + " image, got " + std::to_string(img.channels()) + "x" +
                       std::to_string(img.height) + "x" + std::to_string(img.width));
    Matrix patches(12, kLatentSize * kLatentSize);
    for (int y = 0; y < kLatentSize; ++y)
      for (int x = 0; x < kLatentSize; ++x)
        for (int c = 0; c < 3; ++c)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              patches(c * 4 + dy * 2 + dx, y * kLatentSize + x) = img.at(c, 2 * y + dy, 2 * x + dx) - 0.5f;
    return Latent(kLatentSize, kLatentSize, (proj_ * patches) * kLatentScale);
  }

  Image decode(const Latent& z) const {
    if (z.channels() != kLatentChannels || z.height != kLatentSize || z.width != kLatentSize)
      throw ShapeError("decode_latent: expected a 4x32x32 latent");
    const Matrix patches = (proj_.transpose() * z.data) * (1.0f / kLatentScale);
    Image img(3, kImageSize, kImageSize);
    for (int y = 0; y < kLatentSize; ++y)
      for (int x = 0; x < kLatentSize; ++x)
        for (int c = 0; c < 3; ++c)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              img.at(c, 2 * y + dy, 2 * x + dx) =
                  std::clamp(patches(c * 4 + dy * 2 + dx, y * kLatentSize + x) + 0.5f, 0.0f, 1.0f);
    return img;
  }

 private:
  std::uint64_t seed_;
  Matrix proj_;
};

}  // namespace ssi
