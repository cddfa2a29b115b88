// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssi/error.hpp"

namespace ssi {

// Decoder self-attention blocks are labeled 6..11; a layer schedule has one
// position per label.
inline constexpr int kFirstDecoderLayer = 6;
inline constexpr int kLastDecoderLayer = 11;
inline constexpr int kNumDecoderLayers = kLastDecoderLayer - kFirstDecoderLayer + 1;

enum class WarpShape { linear, quadratic, sqrt, cosine, exponential };
enum class ScheduleAxis { layer, timestep };
enum class Direction { decreasing, increasing };

inline constexpr std::array<WarpShape, 5> kAllWarpShapes = {
    WarpShape::linear, WarpShape::quadratic, WarpShape::sqrt, WarpShape::cosine,
    WarpShape::exponential};

inline std::string_view to_string(WarpShape s) {
  switch (s) {
    case WarpShape::linear: return "linear";
    case WarpShape::quadratic: return "quadratic";
    case WarpShape::sqrt: return "sqrt";
    case WarpShape::cosine: return "cosine";
    case WarpShape::exponential: return "exponential";
  }
  return "?";
}

inline std::string_view to_string(ScheduleAxis a) {
  return a == ScheduleAxis::layer ? "layer" : "timestep";
}

inline std::string_view to_string(Direction d) {
  return d == Direction::decreasing ? "decreasing" : "increasing";
}

inline WarpShape parse_warp_shape(std::string_view s) {
  for (auto shape : kAllWarpShapes)
    if (to_string(shape) == s) return shape;
  throw ParameterError("unknown warp shape '" + std::string(s) + "'");
}

inline Direction parse_direction(std::string_view s) {
  if (s == "decreasing") return Direction::decreasing;
  if (s == "increasing") return Direction::increasing;
  throw ParameterError("unknown direction '" + std::string(s) + "'");
}

/// Monotone warp f: [0,1] -> [0,1] with f(0) = 0 and f(1) = 1.
inline double warp(WarpShape shape, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw DomainError("warp: alpha must lie in [0,1], got " + std::to_string(alpha));
  switch (shape) {
    case WarpShape::linear: return alpha;
    case WarpShape::quadratic: return alpha * alpha;
    case WarpShape::sqrt: return std::sqrt(alpha);
    case WarpShape::cosine: return (1.0 - std::cos(alpha * std::numbers::pi)) / 2.0;
    case WarpShape::exponential: return std::expm1(alpha) / std::expm1(1.0);
  }
  throw DomainError("warp: unknown shape");
}

/// Precomputed control values over `n_positions` positions.
///
/// For a layer schedule position 0 is decoder layer 6 and position 5 is layer
/// 11. For a timestep schedule position 0 is the first (noisiest) denoising
/// step.
struct Schedule {
  std::vector<double> values;
  double start = 0.0;
  double end = 0.0;
  int n_positions = 0;
  WarpShape shape = WarpShape::linear;
  ScheduleAxis axis = ScheduleAxis::timestep;

  double mean() const {
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  }

  bool operator==(const Schedule&) const = default;
};

inline Schedule make_schedule(double start, double end, int n, WarpShape shape,
                              ScheduleAxis axis) {
  if (n < 2) throw ParameterError("make_schedule: need at least 2 positions, got " + std::to_string(n));
  if (!(start >= 0.0 && start <= 1.0) || !(end >= 0.0 && end <= 1.0))
    throw DomainError("make_schedule: endpoints must lie in [0,1]");

  Schedule s;
  s.start = start;
  s.end = end;
  s.n_positions = n;
  s.shape = shape;
  s.axis = axis;
  s.values.resize(static_cast<std::size_t>(n));
  const double span = end - start;
  for (int i = 0; i < n; ++i) {
    const double alpha = static_cast<double>(i) / static_cast<double>(n - 1);
    s.values[static_cast<std::size_t>(i)] = std::clamp(start + span * warp(shape, alpha), 0.0, 1.0);
  }
  return s;
}

/// Endpoints for a directional schedule around `base`: decreasing runs
/// base -> base/2, increasing runs base/2 -> base.
inline std::pair<double, double> direction_endpoints(double base, Direction d) {
  return d == Direction::decreasing ? std::pair{base, base / 2.0} : std::pair{base / 2.0, base};
}

inline Schedule make_directional_schedule(double base, Direction d, int n, WarpShape shape,
                                          ScheduleAxis axis) {
  const auto [start, end] = direction_endpoints(base, d);
  return make_schedule(start, end, n, shape, axis);
}

inline double schedule_lookup(const Schedule& s, int index) {
  if (index < 0 || index >= s.n_positions)
    throw IndexError("schedule_lookup: index " + std::to_string(index) + " outside [0," +
                     std::to_string(s.n_positions) + ")");
  return s.values[static_cast<std::size_t>(index)];
}

/// Schedule position addressed by a (denoising step, decoder layer) site.
inline int schedule_position(ScheduleAxis axis, int step, int layer) {
  return axis == ScheduleAxis::layer ? layer - kFirstDecoderLayer : step;
}

/// Axis along which a control value varies; `none` means a fixed value.
enum class ControlAxis { none, layer, timestep };

inline std::string_view to_string(ControlAxis a) {
  switch (a) {
    case ControlAxis::none: return "none";
    case ControlAxis::layer: return "layer";
    case ControlAxis::timestep: return "timestep";
  }
  return "?";
}

inline ControlAxis parse_control_axis(std::string_view s) {
  if (s == "none") return ControlAxis::none;
  if (s == "layer") return ControlAxis::layer;
  if (s == "timestep") return ControlAxis::timestep;
  throw ParameterError("unknown axis '" + std::string(s) + "'");
}

/// A fixed or directionally scheduled control value.
struct ControlSpec {
  double base = 0.0;
  ControlAxis axis = ControlAxis::none;
  Direction direction = Direction::decreasing;
  WarpShape shape = WarpShape::linear;

  bool operator==(const ControlSpec&) const = default;
};

/// Precomputed schedule for `spec`, or std::nullopt for a fixed value.
/// Timestep schedules span `steps` positions, layer schedules the six decoder layers.
inline std::optional<Schedule> make_control_schedule(const ControlSpec& spec, int steps) {
  if (spec.axis == ControlAxis::none) return std::nullopt;
  const auto axis = spec.axis == ControlAxis::layer ? ScheduleAxis::layer : ScheduleAxis::timestep;
  const int n = axis == ScheduleAxis::layer ? kNumDecoderLayers : steps;
  return make_directional_schedule(spec.base, spec.direction, n, spec.shape, axis);
}

/// Control value at a (step, layer) site.
inline double resolve_control(const ControlSpec& spec, const std::optional<Schedule>& schedule, int step,
                              int layer) {
  if (!schedule) return spec.base;
  return schedule_lookup(*schedule, schedule_position(schedule->axis, step, layer));
}

/// Parses "6,7,8" or a range "6..11" (mixable: "6..8,11").
inline std::vector<int> parse_layer_set(std::string_view text) {
  std::vector<int> out;
  auto to_int = [&](std::string_view t) {
    int v = 0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParameterError("bad layer label '" + std::string(t) + "'");
    return v;
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) throw ParameterError("empty entry in layer list '" + std::string(text) + "'");
    if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const int lo = to_int(item.substr(0, dots)), hi = to_int(item.substr(dots + 2));
      if (lo > hi) throw ParameterError("descending layer range '" + std::string(item) + "'");
      for (int l = lo; l <= hi; ++l) out.push_back(l);
    } else {
      out.push_back(to_int(item));
    }
    pos = comma + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (int l : out)
    if (l < kFirstDecoderLayer || l > kLastDecoderLayer)
      throw ParameterError("layer " + std::to_string(l) + " outside decoder range 6..11");
  return out;
}

inline std::string format_layer_set(const std::vector<int>& layers) {
  std::string s;
  for (int l : layers) s += (s.empty() ? "" : ",") + std::to_string(l);
  return s;
}

inline std::vector<int> all_decoder_layers() {
  std::vector<int> v(kNumDecoderLayers);
  std::iota(v.begin(), v.end(), kFirstDecoderLayer);
  return v;
}

}  // namespace ssi
