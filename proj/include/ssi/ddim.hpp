// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "ssi/denoiser.hpp"
#include "ssi/noise_schedule.hpp"
#include "ssi/tensor.hpp"

namespace ssi {

// Step conventions for an N-step trajectory:
//  - inversion step k evaluates the denoiser at level k-1 and moves to level k;
//  - sampling step j evaluates at level N-1-j and moves to level N-2-j
//    (the last step lands on the clean latent).
// Hook and bank step indices use the sampling numbering, so index 0 is the
// noisiest step in both directions.

enum class TrajectoryDirection { inversion, sampling };

struct LatentTrajectory {
  std::vector<Latent> latents;
  TrajectoryDirection direction = TrajectoryDirection::sampling;

  std::size_t size() const { return latents.size(); }
};

struct InversionResult {
  Latent noise;
  FeatureBank bank;
  LatentTrajectory trajectory;
};

struct SamplingResult {
  Latent output;
  LatentTrajectory trajectory;
};

/// Deterministic DDIM transfer of `x` from signal level `ab_from` to `ab_to`
/// given the predicted noise.
inline Latent ddim_step(const Latent& x, const Latent& eps, double ab_from, double ab_to) {
  const float inv_sqrt_from = static_cast<float>(1.0 / std::sqrt(ab_from));
  const float noise_from = static_cast<float>(std::sqrt(1.0 - ab_from));
  const float sqrt_to = static_cast<float>(std::sqrt(ab_to));
  const float noise_to = static_cast<float>(std::sqrt(1.0 - ab_to));
  const Matrix x0 = (x.data - noise_from * eps.data) * inv_sqrt_from;
  Latent out(x.height, x.width, sqrt_to * x0 + noise_to * eps.data);
  if (!out.all_finite()) throw NumericalError("DDIM step produced non-finite latent");
  return out;
}

/// Maps a clean latent to noise, capturing every decoder block's Q/K/V.
inline InversionResult ddim_invert(const Latent& x0, const DenoiserWeights& w, const NoiseSchedule& ns) {
  detail::check_latent_shape(x0, "ddim_invert");
  if (!x0.all_finite()) throw NumericalError("ddim_invert: non-finite input latent");
  const int n = ns.steps();
  InversionResult r{x0, FeatureBank(n), {{x0}, TrajectoryDirection::inversion}};
  DenoiserHooks hooks;
  hooks.capture = [&r](const AttentionSite& site, const QKV& qkv) { r.bank.put(site, qkv); };
  for (int k = 0; k < n; ++k) {
    const Latent eps = predict_noise(w, r.noise, ns.noise_level(k - 1), n - 1 - k, &hooks);
    r.noise = ddim_step(r.noise, eps, ns.alpha_bar(k - 1), ns.alpha_bar(k));
    r.trajectory.latents.push_back(r.noise);
  }
  return r;
}

/// Denoises `xT` to a clean latent; `hooks` (optional) intercept attention,
/// add conditioning residuals or capture features.
inline SamplingResult ddim_sample(const Latent& xT, const DenoiserWeights& w, const NoiseSchedule& ns,
                                  const DenoiserHooks* hooks = nullptr) {
  detail::check_latent_shape(xT, "ddim_sample");
  if (!xT.all_finite()) throw NumericalError("ddim_sample: non-finite input latent");
  const int n = ns.steps();
  SamplingResult r{xT, {{xT}, TrajectoryDirection::sampling}};
  for (int j = 0; j < n; ++j) {
    const int from = n - 1 - j;
    const Latent eps = predict_noise(w, r.output, ns.noise_level(from), j, hooks);
    r.output = ddim_step(r.output, eps, ns.alpha_bar(from), ns.alpha_bar(from - 1));
    r.trajectory.latents.push_back(r.output);
  }
  return r;
}

/// Bank of the features seen by vanilla sampling from `xT`.
inline FeatureBank capture_sampling_bank(const Latent& xT, const DenoiserWeights& w, const NoiseSchedule& ns) {
  FeatureBank bank(ns.steps());
  DenoiserHooks hooks;
  hooks.capture = [&bank](const AttentionSite& site, const QKV& qkv) { bank.put(site, qkv); };
  ddim_sample(xT, w, ns, &hooks);
  return bank;
}

/// Per-channel renormalisation of `content` to the mean and (population)
/// standard deviation of `style`.
inline Latent adain_init(const Latent& content, const Latent& style) {
  require_same_shape(content, style, "adain_init");
  Latent out = content;
  for (int c = 0; c < content.channels(); ++c) {
    const auto xc = content.data.row(c).cast<double>();
    const auto xs = style.data.row(c).cast<double>();
    const double mc = xc.mean(), ms = xs.mean();
    const double sc = std::sqrt((xc.array() - mc).square().mean());
    const double ss = std::sqrt((xs.array() - ms).square().mean());
    if (!(sc > 0.0)) throw DegenerateInputError("adain_init: content channel " + std::to_string(c) + " has zero variance");
    const double ratio = ss / sc;
    const double shift = ms - mc * ratio;
    out.data.row(c) = (xc.array() * ratio + shift).cast<float>().matrix();
  }
  return out;
}

}  // namespace ssi
