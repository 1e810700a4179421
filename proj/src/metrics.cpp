#include "dscd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dscd {

namespace {

std::size_t intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "--";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

std::optional<double> success_rate(std::span<const EpisodeOutcome> outcomes) {
  if (outcomes.empty()) return std::nullopt;
  long total = 0;
  for (const auto& o : outcomes) total += o.success;
  return static_cast<double>(total) / static_cast<double>(outcomes.size());
}

std::optional<double> spl(std::span<const EpisodeOutcome> outcomes, int* flagged) {
  if (outcomes.empty()) return std::nullopt;
  double sum = 0.0;
  int flags = 0;
  for (const auto& o : outcomes) {
    if (o.success != 1) continue;
    if (o.geodesic <= 0.0) {
      ++flags;
      sum += o.path_length == 0.0 ? 1.0 : 0.0;
      continue;
    }
    sum += o.geodesic / std::max(o.path_length, o.geodesic);
  }
  if (flagged) *flagged = flags;
  return sum / static_cast<double>(outcomes.size());
}

AoriBreakdown aori_episode(const std::vector<std::vector<int>>& footprints,
                           const std::vector<int>& agent_cells, double tau,
                           const MetricsConfig& cfg, int map_size) {
  AoriBreakdown out;
  const int T = static_cast<int>(footprints.size());
  if (T == 0) return out;

  // Revisit overlap ratio over all earlier-step pairs.
  if (T >= 2) {
    double outer = 0.0;
    for (int t = 2; t <= T; ++t) {
      int hits = 0;
      for (int i = 1; i < t; ++i) {
        if (static_cast<double>(intersection_size(footprints[t - 1], footprints[i - 1])) >= tau) {
          ++hits;
        }
      }
      outer += static_cast<double>(hits) / static_cast<double>(t - 1);
    }
    out.r_overlap = outer / static_cast<double>(T - 1);
  }

  // Normalized exploration density.
  std::set<int> accumulated;
  std::map<int, int> seen_count;
  int n_obs = 0;
  double d_sum = 0.0;
  const double map_cells = static_cast<double>(map_size) * static_cast<double>(map_size);
  for (int t = 1; t <= T; ++t) {
    for (int cell : footprints[t - 1]) accumulated.insert(cell);
    if (cfg.occupancy_based_obs) {
      if (t <= static_cast<int>(agent_cells.size())) {
        if (++seen_count[agent_cells[t - 1]] == cfg.revisit_min) ++n_obs;
      }
    } else {
      for (int cell : footprints[t - 1]) {
        if (++seen_count[cell] == cfg.revisit_min) ++n_obs;
      }
    }
    const double lambda =
        cfg.eta * (static_cast<double>(accumulated.size()) / map_cells) * static_cast<double>(t);
    if (lambda <= 0.0) {
      d_sum += 1.0;
      out.lambda_zero = true;
    } else {
      d_sum += std::min(1.0, static_cast<double>(n_obs) / lambda);
    }
  }
  out.d_norm = d_sum / static_cast<double>(T);

  out.aori = 1.0 - (cfg.w_c * (1.0 - out.r_overlap) * (1.0 - out.r_overlap) +
                    cfg.w_d * (1.0 - out.d_norm));
  return out;
}

std::optional<double> disagreement_rate(std::span<const EpisodeStats> episodes) {
  long disagreements = 0;
  long rounds = 0;
  for (const auto& ep : episodes) {
    for (const auto& step : ep.steps) {
      for (const auto& r : step.rounds) {
        ++rounds;
        if (r.tsu_id != r.sib_id) ++disagreements;
      }
    }
  }
  if (rounds == 0) return std::nullopt;
  return static_cast<double>(disagreements) / static_cast<double>(rounds);
}

namespace {

template <typename Fn>
std::optional<double> over_arbitration_set(std::span<const EpisodeStats> episodes, Fn count) {
  long hits = 0;
  long size = 0;
  for (const auto& ep : episodes) {
    for (const auto& step : ep.steps) {
      const bool in_set = static_cast<int>(step.rounds.size()) == ep.rounds_max &&
                          step.final_disagreement && step.has_decision;
      if (!in_set) continue;
      ++size;
      if (count(step)) ++hits;
    }
  }
  if (size == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(size);
}

}  // namespace

std::optional<double> judge_override_rate(std::span<const EpisodeStats> episodes) {
  return over_arbitration_set(
      episodes, [](const StepStats& s) { return s.chosen_id != s.final_tsu_id; });
}

std::optional<double> micro_probe_trigger_rate(std::span<const EpisodeStats> episodes) {
  return over_arbitration_set(episodes, [](const StepStats& s) { return s.micro_probe; });
}

MetricsReport evaluate_suite(std::span<const EpisodeStats> episodes, const MetricsConfig& cfg) {
  MetricsReport rep;
  rep.config = cfg;
  rep.episodes = static_cast<int>(episodes.size());

  std::vector<EpisodeOutcome> outcomes;
  outcomes.reserve(episodes.size());
  double aori_sum = 0.0;
  int aori_count = 0;
  for (const auto& ep : episodes) {
    outcomes.push_back(ep.outcome);
    EpisodeRow row;
    row.name = ep.name;
    row.outcome = ep.outcome;
    if (!ep.footprints.empty()) {
      const double tau = cfg.resolve_tau(ep.open_footprint_cells);
      rep.tau_resolved = tau;
      row.aori = aori_episode(ep.footprints, ep.agent_cells, tau, cfg, ep.map_size);
      aori_sum += row.aori->aori;
      ++aori_count;
    }
    rep.per_episode.push_back(std::move(row));
  }

  rep.sr = success_rate(outcomes);
  rep.spl = spl(outcomes, &rep.spl_flagged);
  if (aori_count > 0) rep.aori = aori_sum / static_cast<double>(aori_count);
  rep.dr = disagreement_rate(episodes);
  rep.jor = judge_override_rate(episodes);
  rep.mptr = micro_probe_trigger_rate(episodes);
  return rep;
}

double delta_spl(const MetricsReport& report, const MetricsReport& baseline) {
  std::set<std::string> a, b;
  for (const auto& row : report.per_episode) a.insert(row.name);
  for (const auto& row : baseline.per_episode) b.insert(row.name);
  if (a != b) throw std::invalid_argument("delta_spl: reports cover different episode suites");
  if (!report.spl || !baseline.spl) throw std::invalid_argument("delta_spl: SPL undefined");
  return *report.spl - *baseline.spl;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("sr", sr);
  put("spl", spl);
  put("aori", aori);
  put("dr", dr);
  put("jor", jor);
  put("mptr", mptr);
  put("delta_spl", delta_spl);
  if (!baseline_name.empty()) j["baseline"] = baseline_name;
  j["episodes"] = episodes;
  j["spl_flagged"] = spl_flagged;
  j["config"] = {{"tau", tau_resolved},
                 {"eta", config.eta},
                 {"w_c", config.w_c},
                 {"w_d", config.w_d},
                 {"revisit_min", config.revisit_min},
                 {"occupancy_based_obs", config.occupancy_based_obs}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : per_episode) {
    nlohmann::json r{{"name", row.name},
                     {"success", row.outcome.success},
                     {"geodesic", std::isfinite(row.outcome.geodesic)
                                      ? nlohmann::json(row.outcome.geodesic)
                                      : nlohmann::json(nullptr)},
                     {"path_length", row.outcome.path_length},
                     {"steps", row.outcome.steps},
                     {"error", row.outcome.error}};
    if (row.aori) {
      r["aori"] = row.aori->aori;
      r["r_overlap"] = row.aori->r_overlap;
      r["d_norm"] = row.aori->d_norm;
      if (row.aori->lambda_zero) r["lambda_zero"] = true;
    }
    rows.push_back(std::move(r));
  }
  j["per_episode"] = std::move(rows);
  return j;
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out << "episodes: " << episodes << "  (tau=" << tau_resolved << ", eta=" << config.eta
      << ", w_c=" << config.w_c << ", w_d=" << config.w_d << ", revisit_min=" << config.revisit_min
      << ")\n";
  out << "  SR    " << fmt_opt(sr) << "\n";
  out << "  SPL   " << fmt_opt(spl) << (spl_flagged ? "  [flagged degenerate geodesics]" : "")
      << "\n";
  out << "  AORI  " << fmt_opt(aori) << "\n";
  out << "  DR    " << fmt_opt(dr) << "\n";
  out << "  JOR   " << fmt_opt(jor) << "\n";
  out << "  MPTR  " << fmt_opt(mptr) << "\n";
  if (delta_spl) out << "  dSPL  " << fmt_opt(delta_spl) << " vs " << baseline_name << "\n";
  return out.str();
}

}  // namespace dscd
