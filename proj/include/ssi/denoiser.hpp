// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ssi/attention.hpp"
#include "ssi/autoencoder.hpp"
#include "ssi/nn.hpp"
#include "ssi/noise_schedule.hpp"
#include "ssi/procedural.hpp"
#include "ssi/schedule.hpp"
#include "ssi/tensor.hpp"

namespace ssi {

// ---------------------------------------------------------------------------
// Hook points

/// Self-attention projections of one decoder block, token-major.
struct QKV {
  Matrix q;  // tokens x qk_dim
  Matrix k;  // tokens x qk_dim
  Matrix v;  // tokens x channels
};

/// Where a hook fires: denoising step index (0 = noisiest) and decoder layer label.
struct AttentionSite {
  int step = 0;
  int layer = kFirstDecoderLayer;
};

/// Optional callbacks invoked inside every decoder block.
///
/// `attention` may return a replacement for the block's attention output
/// (tokens x channels); std::nullopt keeps the vanilla computation.
/// `residual` may add to the block features (channels x pixels) right after
/// the attention sub-layer. `capture` observes the block's own projections.
struct DenoiserHooks {
  std::function<std::optional<Matrix>(const AttentionSite&, const QKV&)> attention;
  std::function<void(const AttentionSite&, Matrix&)> residual;
  std::function<void(const AttentionSite&, const QKV&)> capture;
};

/// Captured Q/K/V for every (step, decoder layer) of one trajectory.
///
/// Entries are written once and are immutable afterwards; a completed bank is
/// shared read-only between runs.
class FeatureBank {
 public:
  FeatureBank() = default;
  explicit FeatureBank(int steps) : steps_(steps), entries_(static_cast<std::size_t>(steps * kNumDecoderLayers)) {}

  int steps() const { return steps_; }

  void put(const AttentionSite& site, QKV qkv) {
    auto& slot = entries_.at(index(site));
    if (slot) throw PreconditionError("FeatureBank: entry (" + std::to_string(site.step) + ", " +
                                      std::to_string(site.layer) + ") already captured");
    slot = std::make_shared<const QKV>(std::move(qkv));
  }

  bool contains(int step, int layer) const {
    if (step < 0 || step >= steps_ || layer < kFirstDecoderLayer || layer > kLastDecoderLayer) return false;
    return entries_[index({step, layer})] != nullptr;
  }

  const QKV& at(int step, int layer) const {
    if (!contains(step, layer))
      throw PreconditionError("FeatureBank: no entry for (" + std::to_string(step) + ", " +
                              std::to_string(layer) + ")");
    return *entries_[index({step, layer})];
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e != nullptr;
    return n;
  }

  bool complete() const { return size() == entries_.size(); }

  bool complete_for(int steps, const std::vector<int>& layers) const {
    if (steps != steps_) return false;
    for (int t = 0; t < steps; ++t)
      for (int l : layers)
        if (!contains(t, l)) return false;
    return true;
  }

 private:
  std::size_t index(const AttentionSite& s) const {
    if (s.step < 0 || s.step >= steps_ || s.layer < kFirstDecoderLayer || s.layer > kLastDecoderLayer)
      throw IndexError("FeatureBank: site (" + std::to_string(s.step) + ", " + std::to_string(s.layer) +
                       ") out of range");
    return static_cast<std::size_t>(s.step * kNumDecoderLayers + (s.layer - kFirstDecoderLayer));
  }

  int steps_ = 0;
  std::vector<std::shared_ptr<const QKV>> entries_;
};

// ---------------------------------------------------------------------------
// Weights

enum class WeightsMode { seeded_random, toy_trained };

inline std::string_view to_string(WeightsMode m) {
  return m == WeightsMode::seeded_random ? "seeded-random" : "toy-trained";
}

inline WeightsMode parse_weights_mode(std::string_view s) {
  if (s == "seeded-random") return WeightsMode::seeded_random;
  if (s == "toy-trained") return WeightsMode::toy_trained;
  throw ParameterError("unknown weights mode '" + std::string(s) + "'");
}

struct DenoiserShape {
  static constexpr int kBaseChannels = 16;    // 32x32 level
  static constexpr int kLowChannels = 32;     // 16x16 and 8x8 encoder levels, blocks 6-8
  static constexpr int kHighChannels = 16;    // blocks 9-11
  static constexpr int kLowQk = 16;
  static constexpr int kHighQk = 8;
  static constexpr int kTimeDim = 32;
  static constexpr int kHeadInput = kHighChannels + kBaseChannels + kLatentChannels;

  struct LayerShape {
    int channels;
    int height;
    int width;
    int qk_dim;
  };

  /// Feature shape of decoder layer `label` (6-8 at 8x8, 9-11 at 16x16).
  static LayerShape layer(int label) {
    if (label < kFirstDecoderLayer || label > kLastDecoderLayer)
      throw ParameterError("unknown decoder layer " + std::to_string(label));
    if (label <= 8) return {kLowChannels, 8, 8, kLowQk};
    return {kHighChannels, 16, 16, kHighQk};
  }
};

struct DecoderBlock {
  int label = kFirstDecoderLayer;
  Matrix wq, wk, wv, wo;  // projections act on token rows: tokens * w^T
  Matrix w1, w2;          // pointwise MLP
  Matrix temb;            // channels x time_dim

  template <class F>
  void for_each_param(F&& f) {
    f(wq); f(wk); f(wv); f(wo); f(w1); f(w2); f(temb);
  }
};

struct TrainConfig {
  int steps = 1000;
  int batch = 8;
  int dataset_size = 32;
  float learning_rate = 3e-3f;
  std::uint64_t dataset_seed = 0;
  std::uint64_t autoencoder_seed = 0;
};

/// Toy U-Net epsilon predictor over 4x32x32 latents.
///
/// Encoder: 3x3 convs 32x32 -> 16x16 -> 8x8 and a time-conditioned middle
/// conv. Decoder: self-attention blocks 6, 7, 8 at 8x8, upsample with skip,
/// blocks 9, 10, 11 at 16x16, upsample with skips, 3x3 head.
struct DenoiserWeights {
  std::uint64_t seed = 0;
  WeightsMode mode = WeightsMode::seeded_random;
  Matrix temb_w;
  nn::Conv3x3 enc0, down1, down2, mid;
  Matrix mid_temb;
  std::array<DecoderBlock, kNumDecoderLayers> blocks;
  Matrix up1;  // 1x1 merge of upsampled low features and the 16x16 skip
  nn::Conv3x3 head;
  std::vector<double> training_loss;

  const DecoderBlock& block(int label) const {
    return blocks.at(static_cast<std::size_t>(label - kFirstDecoderLayer));
  }

  template <class F>
  void for_each_param(F&& f) {
    f(temb_w);
    for (auto* c : {&enc0, &down1, &down2, &mid}) {
      f(c->weight);
      f(c->bias);
    }
    f(mid_temb);
    for (auto& b : blocks) b.for_each_param(f);
    f(up1);
    f(head.weight);
    f(head.bias);
  }

  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const_cast<DenoiserWeights*>(this)->for_each_param([&h](const auto& m) {
      const auto* p = reinterpret_cast<const unsigned char*>(m.data());
      h = fnv1a64({p, sizeof(float) * static_cast<std::size_t>(m.size())}, h);
    });
    return h;
  }
};

namespace detail {

inline void check_latent_shape(const FeatureMap& x, const char* where) {
  if (x.channels() != kLatentChannels || x.height != kLatentSize || x.width != kLatentSize)
    throw ShapeError(std::string(where) + ": expected a 4x32x32 latent, got " + std::to_string(x.channels()) +
                     "x" + std::to_string(x.height) + "x" + std::to_string(x.width));
}

inline Matrix decoder_block(const DecoderBlock& b, const Matrix& x, const Eigen::VectorXf& temb, int step,
                            const DenoiserHooks* hooks) {
  Matrix h = x;
  h.colwise() += b.temb * temb;
  const Matrix tokens = nn::layer_norm_columns(h).transpose();
  QKV qkv{tokens * b.wq.transpose(), tokens * b.wk.transpose(), tokens * b.wv.transpose()};
  const AttentionSite site{step, b.label};
  if (hooks && hooks->capture) hooks->capture(site, qkv);

  std::optional<Matrix> replaced;
  if (hooks && hooks->attention) replaced = hooks->attention(site, qkv);
  const Matrix attn = replaced ? std::move(*replaced) : injected_attention(qkv.q, qkv.k, qkv.v, 1.0);
  if (attn.rows() != tokens.rows() || attn.cols() != b.wo.cols())
    throw ShapeError("decoder block " + std::to_string(b.label) + ": attention hook returned wrong shape");
  h += (attn * b.wo.transpose()).transpose();

  if (hooks && hooks->residual) hooks->residual(site, h);

  Matrix inner = b.w1 * nn::layer_norm_columns(h);
  nn::silu_inplace(inner);
  h += b.w2 * inner;
  return h;
}

}  // namespace detail

/// Input of the output head (36 channels at 32x32).
inline FeatureMap denoiser_features(const DenoiserWeights& w, const Latent& x, double noise_level, int step = 0,
                                    const DenoiserHooks* hooks = nullptr) {
  detail::check_latent_shape(x, "denoiser");
  Matrix temb_m = w.temb_w * nn::timestep_embedding(noise_level, DenoiserShape::kTimeDim);
  nn::silu_inplace(temb_m);
  const Eigen::VectorXf temb = temb_m.col(0);

  FeatureMap h0 = w.enc0(x);
  nn::silu_inplace(h0.data);
  FeatureMap h1 = w.down1(h0);
  nn::silu_inplace(h1.data);
  FeatureMap h2 = w.down2(h1);
  nn::silu_inplace(h2.data);
  FeatureMap m = w.mid(h2);
  m.data.colwise() += w.mid_temb * temb;
  nn::silu_inplace(m.data);

  for (int label = 6; label <= 8; ++label) m.data = detail::decoder_block(w.block(label), m.data, temb, step, hooks);

  const FeatureMap up = nn::upsample2x(m);
  FeatureMap hi(16, 16, w.up1 * nn::concat_channels({&up, &h1}).data);
  for (int label = 9; label <= 11; ++label) hi.data = detail::decoder_block(w.block(label), hi.data, temb, step, hooks);

  const FeatureMap up2 = nn::upsample2x(hi);
  return nn::concat_channels({&up2, &h0, &x});
}

/// Linear minimum-mean-square noise estimate gain for latents of standard
/// deviation kLatentDataStd: eps ~ gain(u) * x_u. The learned head predicts
/// the remainder.
inline constexpr double kLatentDataStd = 0.8;

inline float noise_skip_gain(double noise_level) {
  const double ab = cosine_alpha_bar(noise_level);
  return static_cast<float>(std::sqrt(1.0 - ab) / (ab * kLatentDataStd * kLatentDataStd + 1.0 - ab));
}

/// Predicted noise epsilon(x, u).
inline Latent predict_noise(const DenoiserWeights& w, const Latent& x, double noise_level, int step = 0,
                            const DenoiserHooks* hooks = nullptr) {
  Latent eps(w.head(denoiser_features(w, x, noise_level, step, hooks)));
  eps.data += noise_skip_gain(noise_level) * x.data;
  if (!eps.all_finite()) throw NumericalError("denoiser produced non-finite output");
  return eps;
}

namespace detail {

inline DenoiserWeights random_denoiser(std::uint64_t seed) {
  using S = DenoiserShape;
  Rng rng(seed);
  DenoiserWeights w;
  w.seed = seed;
  w.temb_w = nn::make_linear(S::kTimeDim, S::kTimeDim, 1.0f, rng);
  w.enc0 = nn::make_conv3x3(kLatentChannels, S::kBaseChannels, 1, true, 1.4f, rng);
  w.down1 = nn::make_conv3x3(S::kBaseChannels, S::kLowChannels, 2, true, 1.4f, rng);
  w.down2 = nn::make_conv3x3(S::kLowChannels, S::kLowChannels, 2, true, 1.4f, rng);
  w.mid = nn::make_conv3x3(S::kLowChannels, S::kLowChannels, 1, true, 1.4f, rng);
  w.mid_temb = nn::make_linear(S::kTimeDim, S::kLowChannels, 1.0f, rng);
  for (int label = kFirstDecoderLayer; label <= kLastDecoderLayer; ++label) {
    const auto shape = S::layer(label);
    auto& b = w.blocks[static_cast<std::size_t>(label - kFirstDecoderLayer)];
    b.label = label;
    b.wq = nn::make_linear(shape.channels, shape.qk_dim, 1.0f, rng);
    b.wk = b.wq;  // shared projection: logits are a similarity kernel
    b.wv = nn::make_linear(shape.channels, shape.channels, 1.0f, rng);
    b.wo = nn::make_linear(shape.channels, shape.channels, 0.7f, rng);
    b.w1 = nn::make_linear(shape.channels, 2 * shape.channels, 1.4f, rng);
    b.w2 = nn::make_linear(2 * shape.channels, shape.channels, 0.5f, rng);
    b.temb = nn::make_linear(S::kTimeDim, shape.channels, 0.5f, rng);
  }
  w.up1 = nn::make_linear(2 * S::kLowChannels, S::kHighChannels, 1.0f, rng);
  w.head = nn::make_conv3x3(S::kHeadInput, kLatentChannels, 1, true, 0.5f, rng);
  return w;
}

inline Latent gaussian_latent(Rng& rng) {
  return Latent(kLatentSize, kLatentSize, random_normal(kLatentChannels, kLatentSize * kLatentSize, 1.0f, rng));
}

// Epsilon-prediction regression of the output head (Adam) on procedural
// images; the rest of the network keeps its seeded weights.
inline void train_head(DenoiserWeights& w, const TrainConfig& cfg) {
  const Autoencoder ae(cfg.autoencoder_seed);
  Rng data_rng(cfg.dataset_seed);
  std::vector<Latent> dataset;
  for (int i = 0; i < cfg.dataset_size; ++i) {
    const Image img = i % 2 == 0 ? procedural::content_scene(data_rng)
                                 : procedural::style_texture(data_rng, static_cast<procedural::TextureKind>(
                                                                           (i / 2) % procedural::kNumTextureKinds));
    dataset.push_back(ae.encode(img));
  }

  Rng rng(splitmix64(cfg.dataset_seed ^ 0x747261696eULL));
  std::uniform_int_distribution<int> pick(0, cfg.dataset_size - 1);
  std::uniform_real_distribution<double> level(0.0, kMaxNoiseLevel);

  Matrix& W = w.head.weight;
  Eigen::VectorXf& B = w.head.bias;
  Matrix mW = Matrix::Zero(W.rows(), W.cols()), vW = mW;
  Eigen::VectorXf mB = Eigen::VectorXf::Zero(B.size()), vB = mB;
  constexpr float beta1 = 0.9f, beta2 = 0.999f, adam_eps = 1e-8f;

  w.training_loss.clear();
  for (int step = 1; step <= cfg.steps; ++step) {
    Matrix gW = Matrix::Zero(W.rows(), W.cols());
    Eigen::VectorXf gB = Eigen::VectorXf::Zero(B.size());
    double loss = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const Latent& x0 = dataset[static_cast<std::size_t>(pick(rng))];
      const double u = level(rng);
      const double ab = cosine_alpha_bar(u);
      const Latent noise = gaussian_latent(rng);
      Latent xt(kLatentSize, kLatentSize,
                static_cast<float>(std::sqrt(ab)) * x0.data + static_cast<float>(std::sqrt(1.0 - ab)) * noise.data);
      const FeatureMap feats = denoiser_features(w, xt, u);
      int oh = 0, ow = 0;
      const Matrix cols = nn::im2col3x3(feats, 1, oh, ow);
      Matrix diff = W * cols;
      diff.colwise() += B;
      diff += noise_skip_gain(u) * xt.data;
      diff -= noise.data;
      const float norm = 2.0f / static_cast<float>(diff.size() * cfg.batch);
      loss += diff.squaredNorm() / static_cast<double>(diff.size());
      gW.noalias() += norm * diff * cols.transpose();
      gB += norm * diff.rowwise().sum();
    }
    w.training_loss.push_back(loss / cfg.batch);

    const float c1 = 1.0f - std::pow(beta1, static_cast<float>(step));
    const float c2 = 1.0f - std::pow(beta2, static_cast<float>(step));
    mW = beta1 * mW + (1.0f - beta1) * gW;
    vW = beta2 * vW + (1.0f - beta2) * gW.cwiseAbs2();
    mB = beta1 * mB + (1.0f - beta1) * gB;
    vB = beta2 * vB + (1.0f - beta2) * gB.cwiseAbs2();
    W.array() -= cfg.learning_rate * (mW.array() / c1) / ((vW.array() / c2).sqrt() + adam_eps);
    B.array() -= cfg.learning_rate * (mB.array() / c1) / ((vB.array() / c2).sqrt() + adam_eps);
  }
}

}  // namespace detail

/// Deterministic denoiser weights. `toy-trained` additionally fits the output
/// head on a procedural dataset described by `train`.
inline DenoiserWeights build_denoiser(std::uint64_t seed, WeightsMode mode,
                                      const std::optional<TrainConfig>& train = std::nullopt) {
  DenoiserWeights w = detail::random_denoiser(seed);
  w.mode = mode;
  if (mode == WeightsMode::toy_trained) {
    if (!train) throw ParameterError("build_denoiser: toy-trained mode needs a training configuration");
    if (train->steps <= 0 || train->batch <= 0 || train->dataset_size <= 0 || !(train->learning_rate > 0.0f))
      throw ParameterError("build_denoiser: training steps, batch, dataset size and learning rate must be positive");
    detail::train_head(w, *train);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Weight files: "SSIW", u64 fingerprint, u32 tensor count, then per tensor
// u32 rows, u32 cols and f32 column-major values; little-endian.

inline void save_weights(const std::filesystem::path& path, const DenoiserWeights& w, std::uint64_t fingerprint) {
  std::string out = "SSIW";
  detail::put_u32(out, static_cast<std::uint32_t>(fingerprint & 0xffffffffu));
  detail::put_u32(out, static_cast<std::uint32_t>(fingerprint >> 32));
  std::vector<std::string> chunks;
  const_cast<DenoiserWeights&>(w).for_each_param([&](const auto& m) {
    std::string c;
    detail::put_u32(c, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(c, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) detail::put_u32(c, std::bit_cast<std::uint32_t>(m.data()[i]));
    chunks.push_back(std::move(c));
  });
  detail::put_u32(out, static_cast<std::uint32_t>(chunks.size()));
  for (const auto& c : chunks) out += c;
  detail::write_file(path, out);
}

/// Loads weights into `w` (which supplies seed/mode metadata) if the file's
/// fingerprint matches; returns false otherwise.
inline bool load_weights(const std::filesystem::path& path, DenoiserWeights& w, std::uint64_t fingerprint) {
  const std::string bytes = detail::read_file(path);
  if (bytes.size() < 16 || bytes.compare(0, 4, "SSIW") != 0) throw IoError("weights: bad magic in " + path.string());
  std::size_t pos = 4;
  const std::uint64_t lo = detail::get_u32(bytes, pos), hi = detail::get_u32(bytes, pos);
  if ((lo | (hi << 32)) != fingerprint) return false;
  const std::uint32_t count = detail::get_u32(bytes, pos);
  std::uint32_t seen = 0;
  w.for_each_param([&](auto& m) {
    if (++seen > count) throw IoError("weights: tensor count mismatch");
    const auto rows = detail::get_u32(bytes, pos), cols = detail::get_u32(bytes, pos);
    if (rows != m.rows() || cols != m.cols()) throw IoError("weights: tensor shape mismatch");
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<float>(detail::get_u32(bytes, pos));
  });
  if (seen != count || pos != bytes.size()) throw IoError("weights: tensor count mismatch");
  return true;
}

}  // namespace ssi
