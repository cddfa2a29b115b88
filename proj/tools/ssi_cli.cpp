// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

// `ssi`: stylize, invert, grid, pareto, report, validate-tables.
// Exit codes: 0 success, 1 internal or numerical failure, 2 usage or config error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ssi/config.hpp"

#ifndef SSI_DATA_DIR
#define SSI_DATA_DIR "data"
#endif

namespace {

namespace fs = std::filesystem;

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

// Config file plus per-key flag overrides shared by the model-running commands.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> flags;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value configuration file");
    for (const auto& k : ssi::kConfigKeys) {
      const std::string name(k.name);
      flags[name] = app->add_option("--" + name, values[name], std::string(k.help));
    }
  }

  ssi::CliConfig resolve() const {
    ssi::CliConfig cfg;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw ssi::IoError("config file not found: '" + config_path + "'");
      cfg = ssi::CliConfig::load(config_path);
    }
    for (const auto& [name, opt] : flags)
      if (opt->count() > 0) cfg.set(name, values.at(name));
    return cfg;
  }
};

ssi::Image load_image(const std::string& path) {
  if (!fs::exists(path)) throw ssi::IoError("input image not found: '" + path + "'");
  return ssi::load_ppm(path);
}

std::string format_schedule(const std::optional<ssi::Schedule>& s, double fixed) {
  if (!s) return "fixed " + ssi::detail::csv_number(fixed);
  std::string out = std::string(to_string(s->axis)) + " " + std::string(to_string(s->shape)) + " " +
                    ssi::detail::csv_number(s->start) + " -> " + ssi::detail::csv_number(s->end) + ":";
  for (double v : s->values) out += " " + ssi::detail::fmt(v, "%.6f");
  return out;
}

void print_config_summary(const ssi::RunConfig& rc) {
  std::cerr << "config " << rc.config_id << " seed " << rc.seed << " steps " << rc.steps << "\n";
}

int cmd_stylize(const ConfigOptions& co, const std::string& content_path, const std::string& style_path,
                const std::string& out_path) {
  ssi::CliConfig cfg = co.resolve();
  const ssi::RunConfig rc = cfg.run_config();
  const ssi::ModelConfig mc = cfg.model_config();
  const ssi::Image content = load_image(content_path);
  const ssi::Image style = load_image(style_path);
  print_config_summary(rc);

  const ssi::Models models = ssi::make_models(rc.seed, mc);
  ssi::InstrumentationLog log;
  const ssi::StylizeOutput out = ssi::stylize(content, style, rc.settings(), models, &log);
  ssi::save_ppm(out_path, out.image);
  if (!cfg.get("log_path").empty()) ssi::detail::write_file(cfg.get("log_path"), log.to_csv());

  // Sidecar: the full effective configuration plus provenance comments.
  // `ssi stylize --config <out>.meta` with the same inputs reproduces the output.
  std::ostringstream meta;
  meta << "# ssi stylize sidecar\n"
       << "# content: " << content_path << " checksum " << ssi::hex64(ssi::checksum(content)) << "\n"
       << "# style: " << style_path << " checksum " << ssi::hex64(ssi::checksum(style)) << "\n"
       << "# output checksum " << ssi::hex64(ssi::checksum(out.image)) << "\n"
       << "# denoiser weights " << to_string(mc.mode) << " checksum " << ssi::hex64(models.denoiser->checksum())
       << "\n"
       << "# noise schedule: " << ssi::make_noise_schedule(rc.steps).describe() << "\n"
       << "# gamma schedule: " << format_schedule(out.gamma_schedule, rc.injection.gamma_base) << "\n"
       << "# cn scale schedule: "
       << (rc.cond.enabled ? format_schedule(out.scale_schedule, rc.cond.scale_base) : std::string("disabled")) << "\n";
  cfg.set("config_id", rc.config_id);
  meta << cfg.serialize();
  ssi::detail::write_file(out_path + ".meta", meta.str());
  std::cout << "wrote " << out_path << " (" << ssi::hex64(ssi::checksum(out.image)) << ")\n";
  return 0;
}

int cmd_invert(const ConfigOptions& co, const std::string& image_path, const std::string& out_path) {
  const ssi::CliConfig cfg = co.resolve();
  const ssi::RunConfig rc = cfg.run_config();
  const ssi::Image img = load_image(image_path);
  const ssi::Models models = ssi::make_models(rc.seed, cfg.model_config());
  const ssi::InvertedImage inv =
      ssi::invert_image(img, models, ssi::make_noise_schedule(rc.steps), rc.feature_source);
  ssi::save_latent(out_path, inv.noise);
  std::cout << "wrote " << out_path << " (noise checksum " << ssi::hex64(ssi::checksum(inv.noise)) << ", "
            << inv.bank->size() << " bank entries)\n";
  return 0;
}

// Presets fix the injection and conditioning settings; seed, steps, feature
// source, benchmark size and tau come from the base configuration. The smoke
// preset keeps its 2 x 2 benchmark.
std::vector<ssi::RunConfig> apply_base(std::vector<ssi::RunConfig> grid, const ssi::RunConfig& base, bool keep_size) {
  for (auto& rc : grid) {
    rc.seed = base.seed;
    rc.steps = base.steps;
    rc.feature_source = base.feature_source;
    rc.injection.tau = base.injection.tau;
    if (!keep_size) {
      rc.n_content = base.n_content;
      rc.n_style = base.n_style;
    }
    rc.validate();
  }
  return grid;
}

void export_benchmark(const std::vector<ssi::RunConfig>& grid, const fs::path& dir) {
  fs::create_directories(dir);
  int n_content = 0, n_style = 0;
  for (const auto& rc : grid) {
    n_content = std::max(n_content, rc.n_content);
    n_style = std::max(n_style, rc.n_style);
  }
  const ssi::Benchmark b = ssi::make_benchmark(grid.front().seed, n_content, n_style);
  char name[32];
  for (std::size_t i = 0; i < b.contents.size(); ++i) {
    std::snprintf(name, sizeof name, "content_%03zu.ppm", i);
    ssi::save_ppm(dir / name, b.contents[i]);
  }
  for (std::size_t j = 0; j < b.styles.size(); ++j) {
    std::snprintf(name, sizeof name, "style_%03zu.ppm", j);
    ssi::save_ppm(dir / name, b.styles[j]);
  }
}

int cmd_grid(const ConfigOptions& co, const std::string& preset, const std::string& grid_path, bool list_only) {
  const ssi::CliConfig cfg = co.resolve();
  const ssi::RunConfig base = cfg.run_config();
  std::vector<ssi::RunConfig> grid;
  if (!grid_path.empty()) {
    if (!fs::exists(grid_path)) throw ssi::IoError("grid file not found: '" + grid_path + "'");
    grid = ssi::parse_grid_file(ssi::detail::read_file(grid_path), cfg);
  } else if (preset == "paper") {
    grid = apply_base(ssi::paper_preset_grid(), base, false);
  } else if (preset == "smoke") {
    grid = apply_base(ssi::smoke_grid(), base, true);
  } else {
    throw ssi::ConfigError("preset", "expected paper or smoke, got '" + preset + "'");
  }
  if (grid.empty()) throw ssi::ConfigError("grid", "configuration grid is empty");

  if (list_only) {
    for (const auto& rc : grid) std::cout << rc.config_id << "\n";
    return 0;
  }
  if (!cfg.get("benchmark_dir").empty()) export_benchmark(grid, cfg.get("benchmark_dir"));

  const fs::path results_dir = cfg.get("results_dir");
  fs::create_directories(results_dir);
  ssi::GridOptions opt;
  opt.model = cfg.model_config();
  opt.results_csv = results_dir / "results.csv";
  opt.threads = cfg.threads();
  opt.progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
  const auto results = ssi::run_grid(grid, opt);

  const auto front = ssi::pareto_front(ssi::pareto_points(results));
  std::ostringstream csv;
  csv << "config_id,S,C\n";
  for (const auto& p : front) csv << p.id << ',' << ssi::detail::csv_number(p.x) << ',' << ssi::detail::csv_number(p.y) << '\n';
  ssi::detail::write_file(results_dir / "pareto.csv", csv.str());
  std::cout << "wrote " << opt.results_csv.string() << " (" << results.size() << " configurations, "
            << front.size() << " on the frontier)\n";
  return 0;
}

// Points from a results CSV (aggregate rows) or a plain "id,x,y" CSV.
std::vector<ssi::ParetoPoint> read_points(const std::string& path) {
  if (!fs::exists(path)) throw ssi::IoError("input not found: '" + path + "'");
  std::istringstream in(ssi::detail::read_file(path));
  std::string header;
  std::getline(in, header);
  if (header == ssi::kResultsHeader) return ssi::pareto_points(ssi::load_results(path));
  std::vector<ssi::ParetoPoint> pts;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = ssi::detail::split_csv(line);
    if (f.size() != 3) throw ssi::IoError(path + ": line " + std::to_string(line_no) + " needs id,x,y");
    try {
      pts.push_back({std::stod(f[1]), std::stod(f[2]), f[0]});
    } catch (const std::logic_error&) {
      throw ssi::IoError(path + ": bad number on line " + std::to_string(line_no));
    }
  }
  return pts;
}

int cmd_pareto(const std::string& in_path, const std::string& out_path) {
  const auto front = ssi::pareto_front(read_points(in_path));
  std::ostringstream csv;
  csv << "config_id,S,C\n";
  for (const auto& p : front) csv << p.id << ',' << ssi::detail::csv_number(p.x) << ',' << ssi::detail::csv_number(p.y) << '\n';
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    ssi::detail::write_file(out_path, csv.str());
  }
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_dir, const std::string& fixture) {
  const auto results = ssi::load_results(in_path);
  if (results.empty()) throw ssi::ConfigError("results", "no complete configurations in '" + in_path + "'");
  std::vector<ssi::TableRow> published;
  if (!fixture.empty()) {
    if (!fs::exists(fixture)) throw ssi::IoError("fixture not found: '" + fixture + "'");
    published = ssi::load_table_fixture(fixture);
  }
  const auto front = ssi::pareto_front(ssi::pareto_points(results));
  const auto report = ssi::emit_report(results, front, ssi::find_additivity_sets(results), published);
  ssi::write_report(out_dir, report);
  std::cout << "wrote " << (fs::path(out_dir) / "report.md").string() << "\n";
  return 0;
}

int cmd_validate_tables(const std::string& fixture, double tolerance) {
  if (!fs::exists(fixture)) throw ssi::IoError("fixture not found: '" + fixture + "'");
  const auto report = ssi::validate_table_identity(ssi::load_table_fixture(fixture), tolerance);
  std::cout << "source_table,column_name,artfid,computed,residual,pass\n";
  for (const auto& r : report.rows)
    std::cout << r.row.source_table << ',' << r.row.column_name << ',' << ssi::detail::fmt(r.row.artfid, "%.3f") << ','
              << ssi::detail::fmt(r.computed, "%.4f") << ',' << ssi::detail::fmt(r.residual, "%+.4f") << ','
              << (r.pass ? "yes" : "no") << '\n';
  std::cerr << report.rows.size() << " rows, tolerance " << tolerance << ": "
            << (report.all_pass ? "all within tolerance" : "FAILURES") << "\n";
  return report.all_pass ? 0 : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduled style injection on a toy latent diffusion model"};
  app.require_subcommand(1);
  const std::string default_fixture = std::string(SSI_DATA_DIR) + "/published_tables.csv";

  ConfigOptions stylize_opts, invert_opts, grid_opts;
  std::string content_path, style_path, out_path, image_path, preset, grid_path, in_path, out_dir = "report";
  std::string fixture = default_fixture;
  double tolerance = ssi::kTableTolerance;
  bool list_only = false;

  auto* stylize = app.add_subcommand("stylize", "stylize one content image with one style image (PPM)");
  stylize->add_option("--content", content_path, "content image (PPM)")->required();
  stylize->add_option("--style", style_path, "style image (PPM)")->required();
  stylize->add_option("--out", out_path, "output image (PPM); a .meta sidecar is written next to it")->required();
  stylize_opts.attach(stylize);

  auto* invert = app.add_subcommand("invert", "DDIM-invert an image and save the terminal noise latent");
  invert->add_option("--image", image_path, "input image (PPM)")->required();
  invert->add_option("--out", out_path, "output latent (TLAT)")->required();
  invert_opts.attach(invert);

  auto* grid = app.add_subcommand("grid", "run a configuration grid over the procedural benchmark");
  auto* preset_opt = grid->add_option("--preset", preset, "paper | smoke");
  auto* grid_opt = grid->add_option("--grid", grid_path, "grid file of [config_id] sections");
  preset_opt->excludes(grid_opt);
  grid->add_flag("--list", list_only, "print the configuration ids and exit");
  grid_opts.attach(grid);

  auto* pareto = app.add_subcommand("pareto", "non-dominated set of a results CSV or an id,x,y CSV");
  pareto->add_option("--in", in_path, "input CSV")->required();
  pareto->add_option("--out", out_path, "output CSV (default stdout)");

  auto* report = app.add_subcommand("report", "markdown report and Pareto SVG from a results CSV");
  report->add_option("--in", in_path, "results CSV")->required();
  report->add_option("--out", out_dir, "output directory");
  report->add_option("--fixture", fixture, "published-table fixture; empty skips the published section");

  auto* validate = app.add_subcommand("validate-tables", "check (1+FID)(1+LPIPS) against published ArtFID");
  validate->add_option("--fixture", fixture, "published-table fixture CSV");
  validate->add_option("--tolerance", tolerance, "absolute tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (stylize->parsed()) return cmd_stylize(stylize_opts, content_path, style_path, out_path);
    if (invert->parsed()) return cmd_invert(invert_opts, image_path, out_path);
    if (grid->parsed()) {
      if (preset.empty() && grid_path.empty()) throw ssi::ConfigError("preset", "give --preset or --grid");
      return cmd_grid(grid_opts, preset, grid_path, list_only);
    }
    if (pareto->parsed()) return cmd_pareto(in_path, out_path);
    if (report->parsed()) return cmd_report(in_path, out_dir, fixture);
    if (validate->parsed()) return cmd_validate_tables(fixture, tolerance);
  } catch (const ssi::ParameterError& e) {  // includes ConfigError
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ssi::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ssi::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ssi::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
