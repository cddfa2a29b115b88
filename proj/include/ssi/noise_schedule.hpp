// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ssi/error.hpp"

namespace ssi {

// Cosine-shaped cumulative signal level over the continuous noise level
// u in [0,1]; alpha_bar(0) = 1.
inline constexpr double kCosineOffset = 0.008;
inline constexpr double kMaxNoiseLevel = 0.95;

inline double cosine_alpha_bar(double u, double offset = kCosineOffset) {
  auto f = [offset](double v) {
    const double c = std::cos((v + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
    return c * c;
  };
  return f(u) / f(0.0);
}

/// Discretised noise schedule for an N-step deterministic trajectory.
///
/// Level k (0..N-1) has noise level levels[k] = (k+1)/N * u_max and signal
/// level alphas_bar[k]; level -1 denotes the clean latent (u = 0, alpha_bar = 1).
struct NoiseSchedule {
  std::vector<double> alphas_bar;
  std::vector<double> levels;
  double u_max = kMaxNoiseLevel;
  double offset = kCosineOffset;

  int steps() const { return static_cast<int>(alphas_bar.size()); }
  double alpha_bar(int level) const { return level < 0 ? 1.0 : alphas_bar.at(static_cast<std::size_t>(level)); }
  double noise_level(int level) const { return level < 0 ? 0.0 : levels.at(static_cast<std::size_t>(level)); }

  std::string describe() const {
    return "cosine(offset=" + std::to_string(offset) + ",u_max=" + std::to_string(u_max) +
           ",steps=" + std::to_string(steps()) + ")";
  }
};

inline NoiseSchedule make_noise_schedule(int steps, double u_max = kMaxNoiseLevel,
                                         double offset = kCosineOffset) {
  if (steps < 0) throw ParameterError("noise schedule: negative step count");
  if (!(u_max > 0.0 && u_max < 1.0)) throw ParameterError("noise schedule: u_max must lie in (0,1)");
  NoiseSchedule ns;
  ns.u_max = u_max;
  ns.offset = offset;
  for (int k = 0; k < steps; ++k) {
    const double u = static_cast<double>(k + 1) / static_cast<double>(steps) * u_max;
    ns.levels.push_back(u);
    ns.alphas_bar.push_back(cosine_alpha_bar(u, offset));
  }
  return ns;
}

}  // namespace ssi
