// dscd-nav: episode runner, batch evaluator, and trace tooling.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dscd/render.hpp"
#include "dscd/runner.hpp"

namespace fs = std::filesystem;
using namespace dscd;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;  // key=value
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run configuration file (key = value lines)");
  cmd->add_option("-o,--out", opts.output_dir, "output directory override");
  cmd->add_option("--set", opts.overrides, "inline config override, key=value")->take_all();
  cmd->add_option("--seed", opts.seed, "base seed override");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = RunConfig::load(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set expects key=value, got " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  cfg.validate();
  return cfg;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "     --";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%7.4f", *v);
  return buf;
}

void print_report_header() {
  std::printf("%-12s %7s %7s %7s %7s %7s %7s %7s\n", "config", "SR", "SPL", "AORI", "DR", "JOR",
              "MPTR", "dSPL");
}

void print_report_row(const std::string& name, const MetricsReport& r) {
  std::printf("%-12s %s %s %s %s %s %s %s\n", name.c_str(), fmt(r.sr).c_str(), fmt(r.spl).c_str(),
              fmt(r.aori).c_str(), fmt(r.dr).c_str(), fmt(r.jor).c_str(), fmt(r.mptr).c_str(),
              fmt(r.delta_spl).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-stance debate navigation harness"};
  app.require_subcommand(1);

  CommonOpts run_opts, batch_opts, ablate_opts, sweep_opts, eval_opts;

  auto* cmd_run = app.add_subcommand("run", "run one scenario and write its trace");
  std::string run_scenario;
  cmd_run->add_option("scenario", run_scenario, "scenario file (.scn)")->required();
  add_common(cmd_run, run_opts);

  auto* cmd_batch = app.add_subcommand("batch", "run every scenario in a directory");
  std::string batch_dir;
  cmd_batch->add_option("dir", batch_dir, "directory of .scn files")->required();
  add_common(cmd_batch, batch_opts);

  auto* cmd_ablate = app.add_subcommand("ablate", "run ablation configurations over a suite");
  std::string ablate_dir;
  std::string ablate_configs = "full,tsu-only,sib-only,no-probe";
  std::string ablate_baseline = "tsu-only";
  cmd_ablate->add_option("dir", ablate_dir, "directory of .scn files")->required();
  cmd_ablate->add_option(
      "--configs", ablate_configs,
      "comma-separated tokens: full | tsu-only | sib-only | no-probe | rounds=N");
  cmd_ablate->add_option("--baseline", ablate_baseline, "row used as the dSPL baseline");
  add_common(cmd_ablate, ablate_opts);

  auto* cmd_eval = app.add_subcommand("eval", "compute metrics from trace files");
  std::vector<std::string> eval_traces;
  std::string eval_json;
  cmd_eval->add_option("traces", eval_traces, "trace files (.trace.jsonl)")->required();
  cmd_eval->add_option("--json", eval_json, "also write the machine-readable report here");
  add_common(cmd_eval, eval_opts);

  auto* cmd_sweep = app.add_subcommand("sweep-beta", "micro-probing sensitivity sweep");
  std::string sweep_dir;
  int sweep_cap = 20;
  cmd_sweep->add_option("dir", sweep_dir, "directory of .scn files")->required();
  cmd_sweep->add_option("--step-cap", sweep_cap, "episode step budget for the sweep");
  add_common(cmd_sweep, sweep_opts);

  auto* cmd_render = app.add_subcommand("render", "render a trace to SVG and ASCII");
  std::string render_trace, render_prefix;
  cmd_render->add_option("trace", render_trace, "trace file")->required();
  cmd_render->add_option("-o,--out", render_prefix, "output prefix (default: trace path)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_run->parsed()) {
      RunConfig cfg = resolve_config(run_opts);
      const Scenario scenario = Scenario::load(run_scenario);
      const EpisodeTrace trace = run_episode(cfg, scenario);
      fs::create_directories(cfg.output_dir);
      const std::string path =
          (fs::path(cfg.output_dir) / (trace.scenario_name + ".trace.jsonl")).string();
      trace.save(path);
      std::printf("scenario: %s\n", trace.scenario_name.c_str());
      std::printf("success: %d  steps: %d  path: %.2f m  geodesic: %.2f m\n",
                  trace.outcome.success, trace.outcome.steps, trace.outcome.path_length,
                  trace.outcome.geodesic);
      if (trace.outcome.error) std::printf("error: %s\n", trace.outcome.error_note.c_str());
      std::printf("trace: %s\n", path.c_str());
    } else if (cmd_batch->parsed()) {
      RunConfig cfg = resolve_config(batch_opts);
      const auto scenarios = load_scenario_dir(batch_dir);
      const SuiteResult result = run_suite(cfg, scenarios);
      std::cout << result.report.to_table();
      std::printf("traces: %s\n", cfg.output_dir.c_str());
    } else if (cmd_ablate->parsed()) {
      RunConfig cfg = resolve_config(ablate_opts);
      const auto scenarios = load_scenario_dir(ablate_dir);
      std::vector<std::string> tokens;
      std::stringstream ss(ablate_configs);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) tokens.push_back(tok);
      }
      const auto rows = run_ablation(cfg, scenarios, tokens, ablate_baseline);
      print_report_header();
      for (const auto& row : rows) print_report_row(row.name, row.report);
    } else if (cmd_eval->parsed()) {
      RunConfig cfg = resolve_config(eval_opts);
      std::vector<EpisodeStats> stats;
      for (const auto& path : eval_traces) stats.push_back(EpisodeTrace::load(path).to_stats());
      const MetricsReport report = evaluate_suite(stats, cfg.metrics);
      std::cout << report.to_table();
      if (!eval_json.empty()) {
        std::ofstream out(eval_json, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + eval_json);
        out << report.to_json().dump(2) << "\n";
      }
    } else if (cmd_sweep->parsed()) {
      RunConfig cfg = resolve_config(sweep_opts);
      const auto scenarios = load_scenario_dir(sweep_dir);
      const auto cells = run_beta_sweep(cfg, scenarios, sweep_cap);
      std::printf("%-8s %-8s %7s %7s\n", "beta_r", "beta_th", "SR", "SPL");
      double sr_min = 1.0, sr_max = 0.0;
      for (const auto& cell : cells) {
        std::printf("%-8.3f %-8.3f %s %s\n", cell.beta_r, cell.beta_theta,
                    fmt(cell.report.sr).c_str(), fmt(cell.report.spl).c_str());
        if (cell.report.sr) {
          sr_min = std::min(sr_min, *cell.report.sr);
          sr_max = std::max(sr_max, *cell.report.sr);
        }
      }
      std::printf("SR spread (max - min): %.4f\n", sr_max - sr_min);
    } else if (cmd_render->parsed()) {
      const EpisodeTrace trace = EpisodeTrace::load(render_trace);
      std::string prefix = render_prefix;
      if (prefix.empty()) {
        prefix = render_trace;
        const auto pos = prefix.rfind(".trace.jsonl");
        if (pos != std::string::npos) prefix.erase(pos);
      }
      {
        std::ofstream svg(prefix + ".svg", std::ios::binary);
        if (!svg) throw std::runtime_error("cannot write " + prefix + ".svg");
        svg << render_svg(trace);
      }
      {
        std::ofstream txt(prefix + ".txt", std::ios::binary);
        if (!txt) throw std::runtime_error("cannot write " + prefix + ".txt");
        txt << render_ascii(trace);
      }
      std::printf("wrote %s.svg and %s.txt\n", prefix.c_str(), prefix.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
