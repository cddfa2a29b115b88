// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssi/attention.hpp"
#include "ssi/denoiser.hpp"
#include "ssi/schedule.hpp"

namespace ssi {

struct InjectionConfig {
  double gamma_base = 0.75;
  ControlAxis gamma_axis = ControlAxis::none;
  Direction gamma_direction = Direction::decreasing;
  WarpShape gamma_shape = WarpShape::linear;
  double tau = 1.5;
  std::vector<int> active_layers = all_decoder_layers();

  ControlSpec gamma_spec() const { return {gamma_base, gamma_axis, gamma_direction, gamma_shape}; }

  bool is_active(int layer) const {
    return std::find(active_layers.begin(), active_layers.end(), layer) != active_layers.end();
  }

  void validate() const {
    if (!(gamma_base >= 0.0 && gamma_base <= 1.0))
      throw ConfigError("gamma_base", "must lie in [0,1], got " + std::to_string(gamma_base));
    if (!(tau > 0.0)) throw ConfigError("tau", "must be positive, got " + std::to_string(tau));
    for (int l : active_layers)
      if (l < kFirstDecoderLayer || l > kLastDecoderLayer)
        throw ConfigError("active_layers", "layer " + std::to_string(l) + " outside 6..11");
  }

  bool operator==(const InjectionConfig&) const = default;
};

/// One resolved (step, layer) control value, recorded by the hooks.
struct ControlLogRow {
  int step;
  int layer;
  double value;
  double tau;
};

/// Per-run audit trail of resolved gamma (and conditioning scale) values.
struct InstrumentationLog {
  std::vector<ControlLogRow> gamma;
  std::vector<ControlLogRow> cn_scale;

  /// CSV "kind,step,layer,value,tau"; rows in recording order.
  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "kind,step,layer,value,tau\n";
    for (const auto& r : gamma) os << "gamma," << r.step << ',' << r.layer << ',' << r.value << ',' << r.tau << '\n';
    for (const auto& r : cn_scale) os << "cn_scale," << r.step << ',' << r.layer << ',' << r.value << ",\n";
    return os.str();
  }
};

/// Attention substitution for stylized sampling.
///
/// At active layers the running query is blended with the content bank's
/// query by the resolved gamma and attends to the style bank's keys and
/// values with temperature tau. Inactive layers keep vanilla attention.
inline std::function<std::optional<Matrix>(const AttentionSite&, const QKV&)> injection_hook(
    const InjectionConfig& cfg, const std::optional<Schedule>& gamma_schedule,
    std::shared_ptr<const FeatureBank> content_bank, std::shared_ptr<const FeatureBank> style_bank,
    InstrumentationLog* log = nullptr) {
  cfg.validate();
  if (!content_bank || !style_bank) throw PreconditionError("injection_hook: missing feature bank");
  const int steps = content_bank->steps();
  if (!content_bank->complete_for(steps, cfg.active_layers) || !style_bank->complete_for(steps, cfg.active_layers))
    throw PreconditionError("injection_hook: feature banks are incomplete over the active layers");
  const ControlSpec spec = cfg.gamma_spec();
  return [cfg, spec, gamma_schedule, content_bank = std::move(content_bank), style_bank = std::move(style_bank),
          log](const AttentionSite& site, const QKV& running) -> std::optional<Matrix> {
    if (!cfg.is_active(site.layer)) return std::nullopt;
    const double gamma = resolve_control(spec, gamma_schedule, site.step, site.layer);
    if (log) log->gamma.push_back({site.step, site.layer, gamma, cfg.tau});
    const QKV& content = content_bank->at(site.step, site.layer);
    const QKV& style = style_bank->at(site.step, site.layer);
    return injected_attention(blend_query(content.q, running.q, gamma), style.k, style.v, cfg.tau);
  };
}

}  // namespace ssi
