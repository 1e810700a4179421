#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dscd/env.hpp"
#include "dscd/execution.hpp"
#include "dscd/metrics.hpp"
#include "dscd/policies.hpp"
#include "dscd/remote.hpp"
#include "dscd/trace.hpp"

namespace dscd {

struct PolicySpec {
  enum class Kind { heuristic, scripted, remote };
  Kind kind = Kind::heuristic;
  std::string arg;  // scripted: fixture path; remote: optional model override

  static PolicySpec parse(const std::string& text);
  std::string to_string() const;
};

enum class PipelineVariant { full, tsu_only, sib_only, no_probe };

std::string variant_name(PipelineVariant v);
PipelineVariant parse_variant(const std::string& name);

struct RunConfig {
  int rounds = 3;
  ExecutionConfig exec;
  GridConfig grid;
  MetricsConfig metrics;
  HeuristicWeights weights;
  PolicySpec tsu, sib, nca;
  PipelineVariant variant = PipelineVariant::full;
  double bearing_bias_deg = 0.0;
  double bearing_noise_deg = 10.0;  // emulates imperfect goal-direction estimates
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::string output_dir = "out";
  RemoteBackendConfig remote;

  // Flat "key = value" document; '#' starts a comment. Unknown keys throw.
  static RunConfig load(const std::string& path);
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

// Derives the config for an ablation token: "full", "tsu-only", "sib-only",
// "no-probe", or "rounds=N".
RunConfig config_for_token(const RunConfig& base, const std::string& token);

struct PolicySet {
  std::unique_ptr<StancePolicy> tsu, sib, nca;
};

// Fresh per-episode policy instances; remote roles share `limiter`.
PolicySet make_policies(const RunConfig& cfg, std::shared_ptr<RateLimiter> limiter = nullptr);

EnvView build_env_view(const Env& env, const Pose& pose, const std::vector<CandidateCard>& cards,
                       const std::vector<int>& accumulated_sorted, const RunConfig& cfg,
                       std::uint64_t episode_seed, int step, bool with_sketch);

// One full episode: candidates -> packaging -> debate -> arbitration ->
// execution, until stop or the step budget. Episode seed is
// cfg.seed + episode_index. Policy/backend failures mark the outcome as an
// error; the partial trace is retained.
EpisodeTrace run_episode(const RunConfig& cfg, const Scenario& scenario, int episode_index = 0,
                         std::shared_ptr<RateLimiter> limiter = nullptr);

struct SuiteResult {
  std::vector<EpisodeTrace> traces;  // scenario order
  MetricsReport report;
};

// Runs every scenario (in order, optionally in parallel), persists one trace
// file per episode under cfg.output_dir (unless empty), and aggregates the
// report deterministically.
SuiteResult run_suite(const RunConfig& cfg, const std::vector<Scenario>& scenarios);

std::vector<Scenario> load_scenario_dir(const std::string& dir);

struct AblationRow {
  std::string name;
  MetricsReport report;
};

std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<Scenario>& scenarios,
                                      const std::vector<std::string>& tokens,
                                      const std::string& baseline);

struct SweepCell {
  double beta_r = 0.0;
  double beta_theta = 0.0;
  MetricsReport report;
};

// Micro-probing sensitivity: beta_r in {1/3, 1/2, 2/3} x beta_theta in
// {1/4, 1/3, 1/2} under a reduced step budget.
std::vector<SweepCell> run_beta_sweep(const RunConfig& base, const std::vector<Scenario>& scenarios,
                                      int step_cap = 20);

}  // namespace dscd
