// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ssi/experiment.hpp"

namespace ssi {

// Plain-text configuration: `key = value` lines, `#` starts a comment.

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

inline constexpr std::array<ConfigKey, 27> kConfigKeys = {{
    {"seed", "42", "top-level seed; every component seed is derived from it"},
    {"steps", "50", "DDIM steps for inversion and sampling"},
    {"config_id", "", "run label; empty derives one from the injection and conditioning settings"},
    {"gamma_base", "0.75", "query-preservation gamma (fixed value or schedule start for decreasing)"},
    {"gamma_axis", "none", "none | layer | timestep"},
    {"gamma_direction", "decreasing", "decreasing (base -> base/2) | increasing (base/2 -> base)"},
    {"gamma_shape", "linear", "linear | quadratic | sqrt | cosine | exponential"},
    {"tau", "1.5", "attention temperature applied to injected attention logits"},
    {"active_layers", "6..11", "decoder layers receiving style injection"},
    {"feature_source", "inversion", "inversion | reconstruction: trajectory the feature banks are captured on"},
    {"cn_enabled", "false", "structural conditioning on/off"},
    {"cn_kind", "depth", "depth | edge"},
    {"cn_scale", "0.25", "conditioning scale (fixed value or schedule base)"},
    {"cn_axis", "none", "none | layer | timestep"},
    {"cn_direction", "decreasing", "decreasing | increasing"},
    {"cn_shape", "linear", "linear | quadratic | sqrt | cosine | exponential"},
    {"cn_layers", "6..11", "decoder layers receiving conditioning residuals"},
    {"weights_mode", "toy-trained", "toy-trained | seeded-random"},
    {"train_steps", "1000", "optimizer steps for toy-trained weights"},
    {"train_batch", "8", "batch size for toy-trained weights"},
    {"weights_path", "", "weight cache file; empty disables caching"},
    {"n_content", "20", "procedural content images in the benchmark"},
    {"n_style", "20", "procedural style images in the benchmark"},
    {"benchmark_dir", "", "if set, grid runs export the benchmark images here as PPM"},
    {"results_dir", "results", "output directory for grid results"},
    {"threads", "1", "worker threads for pairs within a configuration"},
    {"log_path", "", "if set, stylize writes the per-(step, layer) control log CSV here"},
}};

inline bool is_config_key(std::string_view key) {
  for (const auto& k : kConfigKeys)
    if (k.name == key) return true;
  return false;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(const std::string& key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(key, "expected a number, got '" + std::string(text) + "'");
  return v;
}

inline bool parse_bool(const std::string& key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(text) + "'");
}

// Re-tags enumeration parse failures with the offending key.
template <class F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace detail

class CliConfig {
 public:
  CliConfig() {
    for (const auto& k : kConfigKeys) values_[std::string(k.name)] = std::string(k.default_value);
  }

  /// Parses `key = value` lines over the defaults. Unknown keys, missing
  /// `=` and repeated keys raise ConfigError naming the key.
  static CliConfig parse(std::string_view text) {
    CliConfig cfg;
    cfg.apply(text);
    return cfg;
  }

  /// Applies `key = value` lines on top of the current values.
  void apply(std::string_view text) {
    std::map<std::string, int> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = raw;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(std::string(detail::trim(line)), "line " + std::to_string(line_no) + " has no '='");
      const std::string key(detail::trim(line.substr(0, eq)));
      if (seen[key]++) throw ConfigError(key, "set more than once");
      set(key, std::string(detail::trim(line.substr(eq + 1))));
    }
  }

  static CliConfig load(const std::filesystem::path& path) { return parse(detail::read_file(path)); }

  void set(const std::string& key, std::string value) {
    if (!is_config_key(key)) throw ConfigError(key, "unknown configuration key");
    values_[key] = std::move(value);
  }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
    return it->second;
  }

  /// All keys in canonical order, one `key = value` line each.
  std::string serialize() const {
    std::string out;
    for (const auto& k : kConfigKeys) out += std::string(k.name) + " = " + get(std::string(k.name)) + "\n";
    return out;
  }

  RunConfig run_config() const {
    using detail::keyed;
    RunConfig rc;
    rc.seed = detail::parse_number<std::uint64_t>("seed", get("seed"));
    rc.steps = detail::parse_number<int>("steps", get("steps"));
    rc.n_content = detail::parse_number<int>("n_content", get("n_content"));
    rc.n_style = detail::parse_number<int>("n_style", get("n_style"));
    rc.feature_source = keyed("feature_source", [&] { return parse_feature_source(get("feature_source")); });

    auto& inj = rc.injection;
    inj.gamma_base = detail::parse_number<double>("gamma_base", get("gamma_base"));
    inj.gamma_axis = keyed("gamma_axis", [&] { return parse_control_axis(get("gamma_axis")); });
    inj.gamma_direction = keyed("gamma_direction", [&] { return parse_direction(get("gamma_direction")); });
    inj.gamma_shape = keyed("gamma_shape", [&] { return parse_warp_shape(get("gamma_shape")); });
    inj.tau = detail::parse_number<double>("tau", get("tau"));
    inj.active_layers = keyed("active_layers", [&] { return parse_layer_set(get("active_layers")); });

    auto& cn = rc.cond;
    cn.enabled = detail::parse_bool("cn_enabled", get("cn_enabled"));
    cn.kind = keyed("cn_kind", [&] { return parse_structure_kind(get("cn_kind")); });
    cn.scale_base = detail::parse_number<double>("cn_scale", get("cn_scale"));
    cn.scale_axis = keyed("cn_axis", [&] { return parse_control_axis(get("cn_axis")); });
    cn.scale_direction = keyed("cn_direction", [&] { return parse_direction(get("cn_direction")); });
    cn.scale_shape = keyed("cn_shape", [&] { return parse_warp_shape(get("cn_shape")); });
    cn.active_layers = keyed("cn_layers", [&] { return parse_layer_set(get("cn_layers")); });

    rc.config_id = get("config_id").empty() ? describe_config(inj, cn) : get("config_id");
    rc.validate();
    return rc;
  }

  ModelConfig model_config() const {
    ModelConfig mc;
    mc.mode = detail::keyed("weights_mode", [&] { return parse_weights_mode(get("weights_mode")); });
    mc.train_steps = detail::parse_number<int>("train_steps", get("train_steps"));
    mc.train_batch = detail::parse_number<int>("train_batch", get("train_batch"));
    if (mc.train_steps < 1) throw ConfigError("train_steps", "must be at least 1");
    if (mc.train_batch < 1) throw ConfigError("train_batch", "must be at least 1");
    mc.weights_path = get("weights_path");
    return mc;
  }

  int threads() const {
    const int t = detail::parse_number<int>("threads", get("threads"));
    if (t < 1) throw ConfigError("threads", "must be at least 1");
    return t;
  }

  bool operator==(const CliConfig&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

/// Grid file: `[config_id]` sections of `key = value` overrides applied on
/// top of a base configuration. Returns one RunConfig per section.
inline std::vector<RunConfig> parse_grid_file(std::string_view text, const CliConfig& base) {
  std::vector<std::pair<std::string, std::string>> sections;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(std::string(line), "unterminated section header");
      sections.emplace_back(std::string(detail::trim(line.substr(1, line.size() - 2))), "");
    } else {
      if (sections.empty()) throw ConfigError(std::string(line), "setting outside a [config_id] section");
      sections.back().second += std::string(line) + "\n";
    }
  }
  std::vector<RunConfig> grid;
  for (const auto& [id, body] : sections) {
    CliConfig cfg = base;
    cfg.apply(body);
    cfg.set("config_id", id);
    grid.push_back(cfg.run_config());
  }
  return grid;
}

/// Config whose run_config() reproduces `rc` (model and path keys from `base`).
inline CliConfig to_cli_config(const RunConfig& rc, CliConfig base = {}) {
  auto num = [](double v) { return detail::csv_number(v); };
  base.set("seed", std::to_string(rc.seed));
  base.set("steps", std::to_string(rc.steps));
  base.set("config_id", rc.config_id);
  base.set("gamma_base", num(rc.injection.gamma_base));
  base.set("gamma_axis", std::string(to_string(rc.injection.gamma_axis)));
  base.set("gamma_direction", std::string(to_string(rc.injection.gamma_direction)));
  base.set("gamma_shape", std::string(to_string(rc.injection.gamma_shape)));
  base.set("tau", num(rc.injection.tau));
  base.set("active_layers", format_layer_set(rc.injection.active_layers));
  base.set("feature_source", std::string(to_string(rc.feature_source)));
  base.set("cn_enabled", rc.cond.enabled ? "true" : "false");
  base.set("cn_kind", std::string(to_string(rc.cond.kind)));
  base.set("cn_scale", num(rc.cond.scale_base));
  base.set("cn_axis", std::string(to_string(rc.cond.scale_axis)));
  base.set("cn_direction", std::string(to_string(rc.cond.scale_direction)));
  base.set("cn_shape", std::string(to_string(rc.cond.scale_shape)));
  base.set("cn_layers", format_layer_set(rc.cond.active_layers));
  base.set("n_content", std::to_string(rc.n_content));
  base.set("n_style", std::to_string(rc.n_style));
  return base;
}

}  // namespace ssi
