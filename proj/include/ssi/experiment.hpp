// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "ssi/metrics.hpp"
#include "ssi/pipeline.hpp"
#include "ssi/procedural.hpp"

namespace ssi {

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string config_id;
  InjectionConfig injection;
  CondConfig cond;
  std::uint64_t seed = 42;
  int steps = 50;
  int n_content = 20;
  int n_style = 20;
  FeatureSource feature_source = FeatureSource::inversion;

  StylizeSettings settings() const { return {injection, cond, steps, feature_source}; }

  void validate() const {
    if (config_id.find_first_of(",\n\r\"") != std::string::npos)
      throw ConfigError("config_id", "must not contain commas, quotes or newlines");
    if (steps < 1) throw ConfigError("steps", "must be at least 1, got " + std::to_string(steps));
    if (n_content < 0) throw ConfigError("n_content", "must be non-negative");
    if (n_style < 0) throw ConfigError("n_style", "must be non-negative");
    injection.validate();
    if (cond.enabled) cond.validate();
    if (steps < 2 && (injection.gamma_axis == ControlAxis::timestep ||
                      (cond.enabled && cond.scale_axis == ControlAxis::timestep)))
      throw ConfigError("steps", "timestep schedules need at least 2 steps");
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string control_label(const char* prefix, const ControlSpec& c) {
  if (c.axis == ControlAxis::none) return std::string(prefix) + "-fixed-" + fmt(c.base);
  return std::string(prefix) + "-" + (c.axis == ControlAxis::layer ? "L" : "T") + "-" +
         (c.direction == Direction::decreasing ? "dec" : "inc") + "-" + fmt(c.base) + "-" +
         std::string(to_string(c.shape));
}

}  // namespace detail

/// Canonical id from the injection and conditioning settings, e.g.
/// "g-T-dec-0.75-cosine+cn-T-dec-0.25-linear".
inline std::string describe_config(const InjectionConfig& inj, const CondConfig& cond) {
  std::string id = detail::control_label("g", inj.gamma_spec());
  if (cond.enabled) id += "+" + detail::control_label("cn", cond.scale_spec());
  return id;
}

/// Image-level stylization of one content/style pair under `rc`.
inline Image stylize_pair(const Image& content, const Image& style, const RunConfig& rc, const Models& m) {
  rc.validate();
  return stylize(content, style, rc.settings(), m).image;
}

// ---------------------------------------------------------------------------
// Preset grids

namespace detail {

inline RunConfig preset(const InjectionConfig& inj, const CondConfig& cond) {
  RunConfig rc;
  rc.injection = inj;
  rc.cond = cond;
  rc.config_id = describe_config(inj, cond);
  return rc;
}

inline InjectionConfig gamma_fixed(double base) {
  InjectionConfig c;
  c.gamma_base = base;
  return c;
}

inline InjectionConfig gamma_sched(double base, ControlAxis axis, Direction d, WarpShape shape) {
  InjectionConfig c = gamma_fixed(base);
  c.gamma_axis = axis;
  c.gamma_direction = d;
  c.gamma_shape = shape;
  return c;
}

inline CondConfig cn_off() { return CondConfig{}; }

inline CondConfig cn(double scale, ControlAxis axis = ControlAxis::none, Direction d = Direction::decreasing,
                     WarpShape shape = WarpShape::linear) {
  CondConfig c;
  c.enabled = true;
  c.scale_base = scale;
  c.scale_axis = axis;
  c.scale_direction = d;
  c.scale_shape = shape;
  return c;
}

}  // namespace detail

/// The 35-configuration sweep: fixed-gamma baselines, linear layer/timestep
/// schedules in both directions, timestep shape variants, conditioning-only
/// settings at gamma 0.75, and four gamma + conditioning combinations.
inline std::vector<RunConfig> paper_preset_grid() {
  using detail::cn;
  using detail::cn_off;
  using detail::gamma_fixed;
  using detail::gamma_sched;
  using detail::preset;
  constexpr auto L = ControlAxis::layer, T = ControlAxis::timestep;
  constexpr auto dec = Direction::decreasing, inc = Direction::increasing;
  constexpr auto lin = WarpShape::linear;
  std::vector<RunConfig> grid;

  for (double g : {0.50, 0.75, 0.90}) grid.push_back(preset(gamma_fixed(g), cn_off()));
  for (double g : {0.50, 0.75, 0.90})
    for (auto axis : {L, T})
      for (auto d : {dec, inc}) grid.push_back(preset(gamma_sched(g, axis, d, lin), cn_off()));
  for (auto shape : {WarpShape::quadratic, WarpShape::sqrt, WarpShape::cosine, WarpShape::exponential})
    grid.push_back(preset(gamma_sched(0.75, T, dec, shape), cn_off()));

  const InjectionConfig g75 = gamma_fixed(0.75);
  for (double s : {0.25, 0.50, 1.00}) grid.push_back(preset(g75, cn(s)));
  for (auto axis : {L, T})
    for (auto d : {dec, inc}) grid.push_back(preset(g75, cn(0.25, axis, d)));
  for (double s : {0.50, 1.00})
    for (auto axis : {L, T}) grid.push_back(preset(g75, cn(s, axis, dec)));
  grid.push_back(preset(g75, cn(0.25, T, dec, WarpShape::sqrt)));

  const auto gt = [&](WarpShape shape) { return gamma_sched(0.75, T, dec, shape); };
  grid.push_back(preset(gt(lin), cn(0.25, L, dec)));
  grid.push_back(preset(gt(lin), cn(0.25, T, dec)));
  grid.push_back(preset(gt(WarpShape::cosine), cn(0.25, T, dec)));
  grid.push_back(preset(gt(WarpShape::sqrt), cn(0.25, T, dec)));
  return grid;
}

/// One configuration over a 2 x 2 benchmark (4 pairs).
inline std::vector<RunConfig> smoke_grid() {
  RunConfig rc = detail::preset(detail::gamma_fixed(0.75), detail::cn_off());
  rc.n_content = 2;
  rc.n_style = 2;
  return {rc};
}

// ---------------------------------------------------------------------------
// Grid runner

struct PairRow {
  std::string pair_id;
  MetricRecord metrics;
};

struct RunResult {
  RunConfig config;
  MetricRecord aggregate;
  std::vector<PairRow> pairs;
  double wall_time_s = 0.0;
  bool resumed = false;
};

/// Mean of per-pair S, C and structure in row order; combined from the means.
inline MetricRecord aggregate_pairs(const std::vector<PairRow>& rows) {
  if (rows.empty()) throw ParameterError("aggregate: no pair rows");
  double s = 0.0, c = 0.0, st = 0.0;
  for (const auto& r : rows) {
    s += r.metrics.style;
    c += r.metrics.content;
    st += r.metrics.structure;
  }
  const double n = static_cast<double>(rows.size());
  return MetricRecord::make(s / n, c / n, st / n);
}

inline const char* kResultsHeader =
    "config_id,gamma_base,gamma_axis,gamma_direction,gamma_shape,cn_enabled,cn_scale,cn_axis,cn_direction,"
    "cn_shape,seed,S,C,structure,combined,wall_time_s,pair_id";

namespace detail {

inline std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string results_row(const RunConfig& rc, const MetricRecord& m, const std::string& wall,
                               const std::string& pair_id) {
  std::ostringstream os;
  os << rc.config_id << ',' << csv_number(rc.injection.gamma_base) << ',' << to_string(rc.injection.gamma_axis) << ','
     << to_string(rc.injection.gamma_direction) << ',' << to_string(rc.injection.gamma_shape) << ','
     << (rc.cond.enabled ? "true" : "false") << ',' << csv_number(rc.cond.scale_base) << ','
     << to_string(rc.cond.scale_axis) << ',' << to_string(rc.cond.scale_direction) << ','
     << to_string(rc.cond.scale_shape) << ',' << rc.seed << ',' << csv_number(m.style) << ','
     << csv_number(m.content) << ',' << csv_number(m.structure) << ',' << csv_number(m.combined) << ',' << wall << ','
     << pair_id;
  return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct StoredRun {
  MetricRecord aggregate;
  std::vector<PairRow> pairs;
  double wall_time_s = 0.0;
  bool has_aggregate = false;
};

inline std::map<std::string, StoredRun> read_results(const std::filesystem::path& path) {
  std::map<std::string, StoredRun> runs;
  if (!std::filesystem::exists(path)) return runs;
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) return runs;
  if (line != kResultsHeader) throw IoError("results: unexpected header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 17) throw IoError("results: malformed row in " + path.string());
    auto& run = runs[f[0]];
    const MetricRecord m{std::stod(f[11]), std::stod(f[12]), std::stod(f[13]), std::stod(f[14])};
    if (f[16] == "*") {
      run.aggregate = m;
      run.has_aggregate = true;
      run.wall_time_s = f[15].empty() ? 0.0 : std::stod(f[15]);
    } else {
      run.pairs.push_back({f[16], m});
    }
  }
  return runs;
}

}  // namespace detail

struct GridOptions {
  ModelConfig model;
  std::filesystem::path results_csv;  // empty: no CSV, no resume
  int threads = 1;
  std::function<void(const std::string&)> progress;
};

/// Runs every configuration over its procedural benchmark.
///
/// Per-pair rows are ordered by pair id and the aggregate is their mean, so
/// results do not depend on execution order or thread count. With a results
/// CSV, configurations whose aggregate row is already present are loaded
/// instead of recomputed and new rows are appended per configuration.
inline std::vector<RunResult> run_grid(const std::vector<RunConfig>& configs, const GridOptions& opt) {
  if (configs.empty()) throw ParameterError("run_grid: empty configuration grid");
  std::set<std::string> ids;
  for (const auto& rc : configs) {
    rc.validate();
    if (!ids.insert(rc.config_id).second) throw ParameterError("run_grid: duplicate config_id '" + rc.config_id + "'");
    if (static_cast<long long>(rc.n_content) * rc.n_style == 0)
      throw ParameterError("run_grid: configuration '" + rc.config_id + "' has an empty benchmark");
  }
  if (opt.threads < 1) throw ConfigError("threads", "must be at least 1");

  auto stored = opt.results_csv.empty() ? std::map<std::string, detail::StoredRun>{}
                                        : detail::read_results(opt.results_csv);
  if (!opt.results_csv.empty() && !std::filesystem::exists(opt.results_csv)) {
    if (opt.results_csv.has_parent_path()) std::filesystem::create_directories(opt.results_csv.parent_path());
    detail::write_file(opt.results_csv, std::string(kResultsHeader) + "\n");
  }

  std::map<std::uint64_t, Models> models;
  using ImageKey = std::tuple<std::uint64_t, int, int, std::size_t>;  // seed, steps, source, index (style: odd)
  std::map<ImageKey, InvertedImage> inversions;
  std::vector<RunResult> results;

  for (const auto& rc : configs) {
    RunResult res;
    res.config = rc;
    if (auto it = stored.find(rc.config_id); it != stored.end() && it->second.has_aggregate) {
      res.aggregate = it->second.aggregate;
      res.pairs = it->second.pairs;
      std::sort(res.pairs.begin(), res.pairs.end(),
                [](const PairRow& a, const PairRow& b) { return a.pair_id < b.pair_id; });
      res.wall_time_s = it->second.wall_time_s;
      res.resumed = true;
      if (opt.progress) opt.progress("skip " + rc.config_id + " (already in results)");
      results.push_back(std::move(res));
      continue;
    }
    if (opt.progress) opt.progress("run " + rc.config_id);
    const auto t0 = std::chrono::steady_clock::now();

    auto mit = models.find(rc.seed);
    if (mit == models.end()) mit = models.emplace(rc.seed, make_models(rc.seed, opt.model)).first;
    const Models& m = mit->second;
    const NoiseSchedule ns = make_noise_schedule(rc.steps);
    std::vector<Image> contents, styles;
    for (int i = 0; i < rc.n_content; ++i) contents.push_back(benchmark_content(rc.seed, static_cast<std::size_t>(i)));
    for (int j = 0; j < rc.n_style; ++j) styles.push_back(benchmark_style(rc.seed, static_cast<std::size_t>(j)));
    auto inverted = [&](const Image& img, std::size_t key_index) -> const InvertedImage& {
      const ImageKey key{rc.seed, rc.steps, static_cast<int>(rc.feature_source), key_index};
      auto it = inversions.find(key);
      if (it == inversions.end()) it = inversions.emplace(key, invert_image(img, m, ns, rc.feature_source)).first;
      return it->second;
    };
    std::vector<const InvertedImage*> ci, si;
    for (std::size_t i = 0; i < contents.size(); ++i) ci.push_back(&inverted(contents[i], 2 * i));
    for (std::size_t j = 0; j < styles.size(); ++j) si.push_back(&inverted(styles[j], 2 * j + 1));

    const std::size_t n_pairs = contents.size() * styles.size();
    res.pairs.resize(n_pairs);
    const StylizeSettings st = rc.settings();
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t p = begin; p < n_pairs; p += stride) {
        const std::size_t i = p / styles.size(), j = p % styles.size();
        const Image out = stylize_inverted(*ci[i], *si[j], contents[i], st, m).image;
        res.pairs[p] = {Benchmark::pair_id(i, j),
                        MetricRecord::make(style_distance({out}, {styles[j]}, m.extractor),
                                           content_distance(out, contents[i], m.extractor),
                                           structure_distance(out, contents[i], m.extractor))};
      }
    };
    const auto n_threads = static_cast<std::size_t>(std::min<long long>(opt.threads, static_cast<long long>(n_pairs)));
    if (n_threads <= 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work, t, n_threads);
    }
    std::sort(res.pairs.begin(), res.pairs.end(),
              [](const PairRow& a, const PairRow& b) { return a.pair_id < b.pair_id; });
    res.aggregate = aggregate_pairs(res.pairs);
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!opt.results_csv.empty()) {
      std::ofstream out(opt.results_csv, std::ios::app);
      if (!out) throw IoError("cannot append to '" + opt.results_csv.string() + "'");
      for (const auto& row : res.pairs) out << detail::results_row(rc, row.metrics, "", row.pair_id) << '\n';
      out << detail::results_row(rc, res.aggregate, detail::csv_number(res.wall_time_s), "*") << '\n';
    }
    results.push_back(std::move(res));
  }
  return results;
}

/// Rebuilds results from a results CSV in first-appearance order. The
/// configuration is recovered from the recorded columns; steps, benchmark
/// size and layer sets keep their defaults. Configurations without an
/// aggregate row are skipped.
inline std::vector<RunResult> load_results(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("cannot open '" + path.string() + "'");
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw IoError("results: unexpected header in " + path.string());
  std::vector<RunResult> out;
  std::map<std::string, std::size_t> index;
  std::set<std::size_t> with_aggregate;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 17) throw IoError("results: line " + std::to_string(line_no) + " needs 17 fields");
    try {
      auto [it, fresh] = index.emplace(f[0], out.size());
      if (fresh) {
        RunConfig rc;
        rc.config_id = f[0];
        rc.injection.gamma_base = std::stod(f[1]);
        rc.injection.gamma_axis = parse_control_axis(f[2]);
        rc.injection.gamma_direction = parse_direction(f[3]);
        rc.injection.gamma_shape = parse_warp_shape(f[4]);
        rc.cond.enabled = f[5] == "true";
        rc.cond.scale_base = std::stod(f[6]);
        rc.cond.scale_axis = parse_control_axis(f[7]);
        rc.cond.scale_direction = parse_direction(f[8]);
        rc.cond.scale_shape = parse_warp_shape(f[9]);
        rc.seed = std::stoull(f[10]);
        out.push_back({rc, {}, {}, 0.0, true});
      }
      RunResult& r = out[it->second];
      const MetricRecord m{std::stod(f[11]), std::stod(f[12]), std::stod(f[13]), std::stod(f[14])};
      if (f[16] == "*") {
        r.aggregate = m;
        r.wall_time_s = f[15].empty() ? 0.0 : std::stod(f[15]);
        with_aggregate.insert(it->second);
      } else {
        r.pairs.push_back({f[16], m});
      }
    } catch (const ParameterError& e) {
      throw IoError("results: line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw IoError("results: bad number on line " + std::to_string(line_no));
    }
  }
  std::vector<RunResult> complete;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (with_aggregate.count(i)) complete.push_back(std::move(out[i]));
  return complete;
}

// ---------------------------------------------------------------------------
// Pareto frontier

struct ParetoPoint {
  double x = 0.0;  // style axis, minimized
  double y = 0.0;  // content axis, minimized
  std::string id;

  bool operator==(const ParetoPoint&) const = default;
};

/// True when `a` dominates `b`: no worse on both axes and better on one.
inline bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.x <= b.x && a.y <= b.y && (a.x < b.x || a.y < b.y);
}

/// Non-dominated subset sorted by x; points equal on both axes are all kept
/// and keep their input order. O(n log n).
inline std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
  for (const auto& p : points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DomainError("pareto_front: non-finite coordinate");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].x < points[b].x || (points[a].x == points[b].x && points[a].y < points[b].y);
  });
  std::vector<ParetoPoint> front;
  double best_y = std::numeric_limits<double>::infinity();  // min y over strictly smaller x
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    while (end < order.size() && points[order[end]].x == points[order[g]].x) ++end;
    const double group_min = points[order[g]].y;
    if (group_min < best_y)
      for (std::size_t k = g; k < end && points[order[k]].y == group_min; ++k) front.push_back(points[order[k]]);
    best_y = std::min(best_y, group_min);
    g = end;
  }
  return front;
}

inline std::vector<ParetoPoint> pareto_points(const std::vector<RunResult>& results) {
  std::vector<ParetoPoint> pts;
  for (const auto& r : results) pts.push_back({r.aggregate.style, r.aggregate.content, r.config.config_id});
  return pts;
}

// ---------------------------------------------------------------------------
// Additivity

/// combined - (base + (gamma_only - base) + (cn_only - base)) per metric axis.
struct MetricResidual {
  double style = 0.0;
  double content = 0.0;
  double structure = 0.0;
  double combined = 0.0;
};

inline double additivity_residual(double base, double gamma_only, double cn_only, double combined) {
  return combined - (base + (gamma_only - base) + (cn_only - base));
}

inline MetricResidual additivity_residual(const MetricRecord& base, const MetricRecord& gamma_only,
                                          const MetricRecord& cn_only, const MetricRecord& combined) {
  return {additivity_residual(base.style, gamma_only.style, cn_only.style, combined.style),
          additivity_residual(base.content, gamma_only.content, cn_only.content, combined.content),
          additivity_residual(base.structure, gamma_only.structure, cn_only.structure, combined.structure),
          additivity_residual(base.combined, gamma_only.combined, cn_only.combined, combined.combined)};
}

struct AdditivitySet {
  std::string base_id, gamma_id, cn_id, combined_id;
  MetricResidual residual;
};

/// For every gamma-schedule + conditioning configuration whose three
/// components (fixed-gamma baseline, gamma-only, conditioning-only) are also
/// present, the additivity residual.
inline std::vector<AdditivitySet> find_additivity_sets(const std::vector<RunResult>& results) {
  auto same_run = [](const RunConfig& a, const RunConfig& b) {
    return a.seed == b.seed && a.steps == b.steps && a.n_content == b.n_content && a.n_style == b.n_style &&
           a.feature_source == b.feature_source;
  };
  auto find = [&](const RunConfig& ref, const InjectionConfig& inj, const CondConfig& cond) -> const RunResult* {
    for (const auto& r : results)
      if (same_run(r.config, ref) && r.config.injection == inj &&
          (cond.enabled ? r.config.cond == cond : !r.config.cond.enabled))
        return &r;
    return nullptr;
  };
  std::vector<AdditivitySet> sets;
  for (const auto& comb : results) {
    const auto& rc = comb.config;
    if (!rc.cond.enabled || rc.injection.gamma_axis == ControlAxis::none) continue;
    InjectionConfig fixed = rc.injection;
    fixed.gamma_axis = ControlAxis::none;
    fixed.gamma_direction = Direction::decreasing;
    fixed.gamma_shape = WarpShape::linear;
    const RunResult* base = find(rc, fixed, CondConfig{});
    const RunResult* g = find(rc, rc.injection, CondConfig{});
    const RunResult* c = find(rc, fixed, rc.cond);
    if (!base || !g || !c) continue;
    sets.push_back({base->config.config_id, g->config.config_id, c->config.config_id, rc.config_id,
                    additivity_residual(base->aggregate, g->aggregate, c->aggregate, comb.aggregate)});
  }
  return sets;
}

/// One published-number additivity check on a single axis.
struct AxisAdditivity {
  double base = 0.0, gamma_only = 0.0, cn_only = 0.0, combined = 0.0;
  double predicted() const { return base + (gamma_only - base) + (cn_only - base); }
  double residual() const { return additivity_residual(base, gamma_only, cn_only, combined); }
};

struct PublishedAdditivity {
  AxisAdditivity fid;
  AxisAdditivity lpips;
};

/// Fixed gamma 0.75, linear timestep-decreasing gamma, timestep-decreasing
/// conditioning, and their combination, taken from the ablation rows.
inline PublishedAdditivity published_additivity(const std::vector<TableRow>& rows) {
  const auto& b = find_table_row(rows, "ablation", "baseline gamma=0.75");
  const auto& g = find_table_row(rows, "ablation", "gamma T-dec 0.75->0.375");
  const auto& c = find_table_row(rows, "ablation", "CN T-dec 0.25->0.125");
  const auto& k = find_table_row(rows, "ablation", "combined gamma T-dec lin + CN T-dec");
  return {{b.fid, g.fid, c.fid, k.fid}, {b.lpips, g.lpips, c.lpips, k.lpips}};
}

// ---------------------------------------------------------------------------
// Directional comparisons

struct DirectionalComparison {
  std::string control;  // "gamma" or "cn"
  ControlAxis axis = ControlAxis::none;
  WarpShape shape = WarpShape::linear;
  double base = 0.0;
  std::string decreasing_id, increasing_id;
  MetricRecord decreasing, increasing;

  bool decreasing_better() const { return decreasing.combined < increasing.combined; }
};

/// Pairs of results that differ only in the direction of one schedule.
inline std::vector<DirectionalComparison> directional_comparisons(const std::vector<RunResult>& results) {
  std::vector<DirectionalComparison> out;
  for (const auto& dec : results) {
    for (const auto& inc : results) {
      RunConfig a = dec.config, b = inc.config;
      a.config_id.clear();
      b.config_id.clear();
      if (a.injection.gamma_axis != ControlAxis::none && a.injection.gamma_direction == Direction::decreasing &&
          b.injection.gamma_direction == Direction::increasing) {
        b.injection.gamma_direction = Direction::decreasing;
        if (a == b)
          out.push_back({"gamma", a.injection.gamma_axis, a.injection.gamma_shape, a.injection.gamma_base,
                         dec.config.config_id, inc.config.config_id, dec.aggregate, inc.aggregate});
      } else if (a.cond.enabled && a.cond.scale_axis != ControlAxis::none &&
                 a.cond.scale_direction == Direction::decreasing && b.cond.scale_direction == Direction::increasing) {
        b.cond.scale_direction = Direction::decreasing;
        if (a == b)
          out.push_back({"cn", a.cond.scale_axis, a.cond.scale_shape, a.cond.scale_base, dec.config.config_id,
                         inc.config.config_id, dec.aggregate, inc.aggregate});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct Report {
  std::string markdown;
  std::string svg;
};

inline constexpr const char* kNonReproducibilityNote =
    "Absolute metric values here come from a toy denoiser, a fixed linear autoencoder and a random-feature "
    "extractor evaluated on procedural images. They are not comparable with numbers obtained from pretrained "
    "diffusion backbones and pretrained metric networks, and they do not reproduce any published table. Only "
    "orderings and differences within this report carry meaning.";

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string render_svg(const std::vector<ParetoPoint>& points, const std::vector<ParetoPoint>& front) {
  constexpr double W = 640, H = 480, M = 60;
  double x0 = points.front().x, x1 = x0, y0 = points.front().y, y1 = y0;
  for (const auto& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double p = span > 0 ? 0.05 * span : std::max(1e-3, 0.05 * std::abs(lo));
    lo -= p;
    hi += p;
  };
  pad(x0, x1);
  pad(y0, y1);
  auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n"
     << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n"
     << "<line x1=\"60\" y1=\"420\" x2=\"580\" y2=\"420\" stroke=\"black\"/>\n"
     << "<line x1=\"60\" y1=\"60\" x2=\"60\" y2=\"420\" stroke=\"black\"/>\n"
     << "<text x=\"320\" y=\"460\" text-anchor=\"middle\" font-size=\"14\">style distance S</text>\n"
     << "<text x=\"18\" y=\"240\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 240)\">"
        "content distance C</text>\n"
     << "<text x=\"60\" y=\"436\" font-size=\"10\" text-anchor=\"middle\">" << fmt(x0, "%.4f") << "</text>\n"
     << "<text x=\"580\" y=\"436\" font-size=\"10\" text-anchor=\"middle\">" << fmt(x1, "%.4f") << "</text>\n"
     << "<text x=\"56\" y=\"424\" font-size=\"10\" text-anchor=\"end\">" << fmt(y0, "%.4f") << "</text>\n"
     << "<text x=\"56\" y=\"64\" font-size=\"10\" text-anchor=\"end\">" << fmt(y1, "%.4f") << "</text>\n";
  if (!front.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#2a9d3a\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < front.size(); ++i)
      os << (i ? " " : "") << fmt(sx(front[i].x)) << ',' << fmt(sy(front[i].y));
    os << "\"/>\n";
  }
  for (const auto& p : points)
    os << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(sy(p.y)) << "\" r=\"4\" fill=\"#3366cc\"><title>"
       << xml_escape(p.id) << "</title></circle>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace detail

/// Markdown summary plus an SVG scatter (x = S, y = C) with the frontier
/// polyline. Output bytes depend only on the inputs; wall times are omitted.
inline Report emit_report(const std::vector<RunResult>& results, const std::vector<ParetoPoint>& front,
                          const std::vector<AdditivitySet>& additivity,
                          const std::vector<TableRow>& published = {}) {
  if (results.empty()) throw ParameterError("emit_report: no results");
  using detail::fmt;
  std::ostringstream md;
  md << "# Scheduled style injection: toy benchmark report\n\n"
     << "> " << kNonReproducibilityNote << "\n\n"
     << "## Configurations\n\n"
     << "| config_id | pairs | S | C | structure | combined |\n|---|---|---|---|---|---|\n";
  for (const auto& r : results)
    md << "| " << r.config.config_id << " | " << r.pairs.size() << " | " << fmt(r.aggregate.style, "%.6f") << " | "
       << fmt(r.aggregate.content, "%.6f") << " | " << fmt(r.aggregate.structure, "%.6f") << " | "
       << fmt(r.aggregate.combined, "%.6f") << " |\n";

  md << "\n## Pareto frontier (minimize S and C)\n\n";
  for (const auto& p : front) md << "- " << p.id << " (S " << fmt(p.x, "%.6f") << ", C " << fmt(p.y, "%.6f") << ")\n";

  const auto dirs = directional_comparisons(results);
  md << "\n## Decreasing vs increasing schedules\n\n";
  if (dirs.empty()) {
    md << "No decreasing/increasing pairs in this result set.\n";
  } else {
    md << "| control | axis | shape | base | dS (dec-inc) | dC (dec-inc) | dcombined (dec-inc) | decreasing better |\n"
       << "|---|---|---|---|---|---|---|---|\n";
    int wins = 0;
    for (const auto& d : dirs) {
      wins += d.decreasing_better();
      md << "| " << d.control << " | " << to_string(d.axis) << " | " << to_string(d.shape) << " | "
         << fmt(d.base) << " | " << fmt(d.decreasing.style - d.increasing.style, "%+.6f") << " | "
         << fmt(d.decreasing.content - d.increasing.content, "%+.6f") << " | "
         << fmt(d.decreasing.combined - d.increasing.combined, "%+.6f") << " | "
         << (d.decreasing_better() ? "yes" : "no") << " |\n";
    }
    md << "\nDecreasing wins on the combined metric in " << wins << " of " << dirs.size()
       << " comparisons. These orderings are reported, not required, at toy scale.\n";
  }

  md << "\n## Additivity residuals (combined - additive prediction)\n\n";
  if (additivity.empty()) {
    md << "No complete baseline / gamma-only / conditioning-only / combined sets in this result set.\n";
  } else {
    md << "| combined | gamma-only | cn-only | base | rS | rC | rstructure |\n|---|---|---|---|---|---|---|\n";
    for (const auto& a : additivity)
      md << "| " << a.combined_id << " | " << a.gamma_id << " | " << a.cn_id << " | " << a.base_id << " | "
         << fmt(a.residual.style, "%+.6f") << " | " << fmt(a.residual.content, "%+.6f") << " | "
         << fmt(a.residual.structure, "%+.6f") << " |\n";
  }

  if (!published.empty()) {
    const auto pa = published_additivity(published);
    md << "\n## Published-number arithmetic\n\n"
       << "- FID axis: predicted " << fmt(pa.fid.predicted(), "%.3f") << ", observed " << fmt(pa.fid.combined, "%.3f")
       << ", residual " << fmt(pa.fid.residual(), "%+.3f") << "\n"
       << "- LPIPS axis: predicted " << fmt(pa.lpips.predicted(), "%.3f") << ", observed "
       << fmt(pa.lpips.combined, "%.3f") << ", residual " << fmt(pa.lpips.residual(), "%+.3f") << "\n";
    const auto& sq = find_table_row(published, "ablation", "combined gamma T-dec sqrt + CN T-dec");
    const auto& g50 = find_table_row(published, "ablation", "baseline gamma=0.50");
    const ParetoPoint a{sq.fid, sq.lpips, "sqrt+CN"}, b{g50.fid, g50.lpips, "fixed 0.50"};
    md << "- sqrt-gamma + CN (FID " << fmt(sq.fid, "%.3f") << ", LPIPS " << fmt(sq.lpips, "%.3f")
       << ") vs fixed gamma 0.50 (FID " << fmt(g50.fid, "%.3f") << ", LPIPS " << fmt(g50.lpips, "%.3f") << "): "
       << (dominates(a, b) ? "dominates" : "does not dominate") << " (FID " << (a.x < b.x ? "lower" : "not lower")
       << ", LPIPS " << (a.y < b.y ? "lower" : "not lower") << ")\n";
  }

  return {md.str(), detail::render_svg(pareto_points(results), front)};
}

inline void write_report(const std::filesystem::path& dir, const Report& r) {
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "report.md", r.markdown);
  detail::write_file(dir / "pareto.svg", r.svg);
}

}  // namespace ssi
