// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ssi/autoencoder.hpp"
#include "ssi/ddim.hpp"
#include "ssi/denoiser.hpp"
#include "ssi/metrics.hpp"
#include "ssi/style_injection.hpp"
#include "ssi/struct_cond.hpp"

namespace ssi {

/// Which trajectory supplies the injected Q/K/V banks.
///
/// `inversion` captures features while inverting the clean latent.
/// `reconstruction` captures them while sampling back from the inverted
/// noise, so the banks match the features vanilla sampling would see.
enum class FeatureSource { inversion, reconstruction };

inline std::string_view to_string(FeatureSource f) {
  return f == FeatureSource::inversion ? "inversion" : "reconstruction";
}

inline FeatureSource parse_feature_source(std::string_view s) {
  if (s == "inversion") return FeatureSource::inversion;
  if (s == "reconstruction") return FeatureSource::reconstruction;
  throw ParameterError("unknown feature source '" + std::string(s) + "'");
}

struct ModelConfig {
  WeightsMode mode = WeightsMode::toy_trained;
  int train_steps = 1000;
  int train_batch = 8;
  std::filesystem::path weights_path;  // empty: no weight cache

  bool operator==(const ModelConfig&) const = default;
};

/// Every seeded component, derived from one top-level seed.
struct Models {
  std::uint64_t seed = 0;
  Autoencoder autoencoder{0};
  std::shared_ptr<const DenoiserWeights> denoiser;
  CondWeights cond;
  FeatureExtractor extractor{0};
};

inline std::uint64_t weights_fingerprint(std::uint64_t seed, const ModelConfig& mc) {
  std::string key = "ssiw-v2:" + std::to_string(seed) + ":" + std::string(to_string(mc.mode));
  if (mc.mode == WeightsMode::toy_trained) key += ":" + std::to_string(mc.train_steps) + ":" + std::to_string(mc.train_batch);
  return fnv1a64({reinterpret_cast<const unsigned char*>(key.data()), key.size()});
}

inline DenoiserWeights build_denoiser_for(std::uint64_t seed, const ModelConfig& mc) {
  std::optional<TrainConfig> train;
  if (mc.mode == WeightsMode::toy_trained) {
    TrainConfig tc;
    tc.steps = mc.train_steps;
    tc.batch = mc.train_batch;
    tc.dataset_seed = derive_seed(seed, SeedStream::training);
    tc.autoencoder_seed = derive_seed(seed, SeedStream::autoencoder);
    train = tc;
  }
  return build_denoiser(derive_seed(seed, SeedStream::denoiser), mc.mode, train);
}

/// Builds (or loads from `mc.weights_path` when its fingerprint matches) the
/// denoiser; a fresh build is written back to the cache path.
inline Models make_models(std::uint64_t seed, const ModelConfig& mc) {
  Models m;
  m.seed = seed;
  m.autoencoder = Autoencoder(derive_seed(seed, SeedStream::autoencoder));
  m.cond = CondWeights(derive_seed(seed, SeedStream::conditioning));
  m.extractor = FeatureExtractor(derive_seed(seed, SeedStream::extractor));
  const std::uint64_t fp = weights_fingerprint(seed, mc);
  if (!mc.weights_path.empty() && std::filesystem::exists(mc.weights_path)) {
    DenoiserWeights w = detail::random_denoiser(derive_seed(seed, SeedStream::denoiser));
    w.mode = mc.mode;
    if (load_weights(mc.weights_path, w, fp)) {
      m.denoiser = std::make_shared<const DenoiserWeights>(std::move(w));
      return m;
    }
  }
  auto w = std::make_shared<DenoiserWeights>(build_denoiser_for(seed, mc));
  if (!mc.weights_path.empty()) save_weights(mc.weights_path, *w, fp);
  m.denoiser = std::move(w);
  return m;
}

/// An encoded image with its inverted noise and injection bank.
struct InvertedImage {
  Latent latent;
  Latent noise;
  std::shared_ptr<const FeatureBank> bank;
};

inline InvertedImage invert_image(const Image& img, const Models& m, const NoiseSchedule& ns, FeatureSource source) {
  InvertedImage out;
  out.latent = m.autoencoder.encode(img);
  InversionResult inv = ddim_invert(out.latent, *m.denoiser, ns);
  out.noise = inv.noise;
  out.bank = source == FeatureSource::inversion
                 ? std::make_shared<const FeatureBank>(std::move(inv.bank))
                 : std::make_shared<const FeatureBank>(capture_sampling_bank(inv.noise, *m.denoiser, ns));
  return out;
}

/// Injection and conditioning settings of one stylization.
struct StylizeSettings {
  InjectionConfig injection;
  CondConfig cond;
  int steps = 50;
  FeatureSource feature_source = FeatureSource::inversion;
};

struct StylizeOutput {
  Image image;
  Latent latent;
  std::optional<Schedule> gamma_schedule;
  std::optional<Schedule> scale_schedule;
};

/// Stylizes from pre-inverted inputs (banks must come from a `steps`-step run).
inline StylizeOutput stylize_inverted(const InvertedImage& content, const InvertedImage& style, const Image& content_img,
                                      const StylizeSettings& st, const Models& m, InstrumentationLog* log = nullptr) {
  st.injection.validate();
  if (st.cond.enabled) st.cond.validate();
  const NoiseSchedule ns = make_noise_schedule(st.steps);
  StylizeOutput out;
  out.gamma_schedule = make_control_schedule(st.injection.gamma_spec(), st.steps);
  DenoiserHooks hooks;
  hooks.attention = injection_hook(st.injection, out.gamma_schedule, content.bank, style.bank, log);
  if (st.cond.enabled) {
    out.scale_schedule = make_control_schedule(st.cond.scale_spec(), st.steps);
    hooks.residual = conditioning_hook(st.cond, out.scale_schedule, extract_structure(content_img, st.cond.kind),
                                       m.cond, log);
  }
  const Latent start = adain_init(content.noise, style.noise);
  out.latent = ddim_sample(start, *m.denoiser, ns, &hooks).output;
  out.image = m.autoencoder.decode(out.latent);
  return out;
}

inline StylizeOutput stylize(const Image& content, const Image& style, const StylizeSettings& st, const Models& m,
                             InstrumentationLog* log = nullptr) {
  const NoiseSchedule ns = make_noise_schedule(st.steps);
  const InvertedImage ci = invert_image(content, m, ns, st.feature_source);
  const InvertedImage si = invert_image(style, m, ns, st.feature_source);
  return stylize_inverted(ci, si, content, st, m, log);
}

/// Vanilla reconstruction: invert then sample without hooks, decoded.
inline Image reconstruct(const Image& img, int steps, const Models& m) {
  const NoiseSchedule ns = make_noise_schedule(steps);
  const Latent z = m.autoencoder.encode(img);
  return m.autoencoder.decode(ddim_sample(ddim_invert(z, *m.denoiser, ns).noise, *m.denoiser, ns).output);
}

}  // namespace ssi
