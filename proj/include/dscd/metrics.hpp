#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dscd/grid.hpp"

namespace dscd {

struct EpisodeOutcome {
  int success = 0;           // S in {0, 1}
  double geodesic = 0.0;     // l, meters (+inf when disconnected)
  double path_length = 0.0;  // p, meters
  int steps = 0;             // T
  bool error = false;        // episode aborted by a policy/backend failure
  std::string error_note;

  bool operator==(const EpisodeOutcome&) const = default;
};

struct MetricsConfig {
  // Overlap threshold in cells; when unset it resolves to a quarter of the
  // open-space footprint size.
  std::optional<double> tau;
  double eta = 1.0;
  double w_c = 0.8;
  double w_d = 0.2;
  int revisit_min = 3;
  bool occupancy_based_obs = false;  // count agent-cell visits instead of observations

  double resolve_tau(double open_footprint_cells) const {
    return tau ? *tau : 0.25 * open_footprint_cells;
  }
  static double open_footprint_cells(const GridConfig& g) {
    return kPi * (g.map_size / g.voxel_ray_size) * (g.map_size / g.voxel_ray_size);
  }
};

// Flat per-round record for debate metrics.
struct RoundStat {
  std::string tsu_id;
  std::string sib_id;  // equals tsu_id on agreement
  bool agreed = false;
};

struct StepStats {
  std::vector<RoundStat> rounds;
  bool final_disagreement = false;
  std::string final_tsu_id;
  std::string chosen_id;
  bool micro_probe = false;
  bool has_decision = false;
};

struct EpisodeStats {
  std::string name;
  EpisodeOutcome outcome;
  int rounds_max = 3;  // configured round budget (R_max)
  std::vector<StepStats> steps;
  std::vector<std::vector<int>> footprints;  // sorted cell indices per step
  std::vector<int> agent_cells;              // agent's cell per step
  int map_size = 64;
  double open_footprint_cells = 0.0;
};

struct AoriBreakdown {
  double r_overlap = 0.0;
  double d_norm = 0.0;
  double aori = 0.0;
  bool lambda_zero = false;  // some step had an empty density budget
};

// --- per-suite aggregates -------------------------------------------------

std::optional<double> success_rate(std::span<const EpisodeOutcome> outcomes);

// (1/N) * sum S_i * l_i / max(p_i, l_i). A successful episode with l = 0
// contributes 1 only when p = 0, else 0; such episodes are flagged.
std::optional<double> spl(std::span<const EpisodeOutcome> outcomes, int* flagged = nullptr);

AoriBreakdown aori_episode(const std::vector<std::vector<int>>& footprints,
                           const std::vector<int>& agent_cells, double tau,
                           const MetricsConfig& cfg, int map_size);

std::optional<double> disagreement_rate(std::span<const EpisodeStats> episodes);
std::optional<double> judge_override_rate(std::span<const EpisodeStats> episodes);
std::optional<double> micro_probe_trigger_rate(std::span<const EpisodeStats> episodes);

struct EpisodeRow {
  std::string name;
  EpisodeOutcome outcome;
  std::optional<AoriBreakdown> aori;
};

struct MetricsReport {
  std::optional<double> sr, spl, aori, dr, jor, mptr;
  std::optional<double> delta_spl;
  std::string baseline_name;
  int episodes = 0;
  int spl_flagged = 0;
  double tau_resolved = 0.0;
  MetricsConfig config;
  std::vector<EpisodeRow> per_episode;

  nlohmann::json to_json() const;
  std::string to_table() const;  // human-readable summary
};

// Streaming evaluation: one pass over the episodes in order.
MetricsReport evaluate_suite(std::span<const EpisodeStats> episodes, const MetricsConfig& cfg);

// report.spl - baseline.spl; the two reports must cover the same episode
// name sets (throws std::invalid_argument otherwise).
double delta_spl(const MetricsReport& report, const MetricsReport& baseline);

}  // namespace dscd
