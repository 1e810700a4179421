#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dscd/debate.hpp"
#include "dscd/env.hpp"
#include "dscd/execution.hpp"
#include "dscd/geometry.hpp"
#include "dscd/grid.hpp"
#include "dscd/metrics.hpp"
#include "dscd/policies.hpp"

namespace dscd {

struct StepRecord {
  int step = 0;
  Pose pose;  // at decision time
  std::vector<CandidateCard> cards;
  DebateTrace debate;
  StepDecision decision;
  VisibilityFootprint footprint;  // at `pose`
  Pose pose_after;
  bool collision = false;
  double moved = 0.0;
  bool backend_fallback = false;

  bool operator==(const StepRecord&) const = default;
};

// One episode's full log: a header with the run configuration and map, one
// record per step, and the outcome. Serializes to JSONL losslessly.
struct EpisodeTrace {
  std::string scenario_name;
  std::uint64_t seed = 0;
  int rounds = 3;
  std::string variant = "full";
  GridConfig grid;
  ExecutionConfig exec;
  HeuristicWeights weights;
  std::vector<std::string> map_rows;  // '#' / '.' only
  Pose start;
  TargetSpec target;
  std::vector<std::string> cues;

  std::vector<StepRecord> steps;
  EpisodeOutcome outcome;

  std::string to_jsonl() const;
  static EpisodeTrace from_jsonl(const std::string& text);
  static EpisodeTrace load(const std::string& path);
  void save(const std::string& path) const;

  EpisodeStats to_stats() const;

  bool operator==(const EpisodeTrace&) const = default;
};

// FNV-1a over a canonical serialization; stable across runs and platforms.
std::string config_digest(const nlohmann::json& canonical);

void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);
void to_json(nlohmann::json& j, const CandidateCard& c);
void from_json(const nlohmann::json& j, CandidateCard& c);
void to_json(nlohmann::json& j, const StepDecision& d);
void from_json(const nlohmann::json& j, StepDecision& d);
void to_json(nlohmann::json& j, const GridConfig& g);
void from_json(const nlohmann::json& j, GridConfig& g);
void to_json(nlohmann::json& j, const ExecutionConfig& e);
void from_json(const nlohmann::json& j, ExecutionConfig& e);
void to_json(nlohmann::json& j, const HeuristicWeights& w);
void from_json(const nlohmann::json& j, HeuristicWeights& w);
void to_json(nlohmann::json& j, const StepRecord& r);
void from_json(const nlohmann::json& j, StepRecord& r);
void to_json(nlohmann::json& j, const EpisodeOutcome& o);
void from_json(const nlohmann::json& j, EpisodeOutcome& o);

}  // namespace dscd
