#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dscd/geometry.hpp"

namespace dscd {

enum class Relation { supports, attacks };

// One support/attack statement grounded in a candidate identity. `metrics`
// carries the numeric scores behind the statement (keys such as "progress",
// "safety", "info") for downstream arbitration.
struct EvidenceItem {
  std::string text;
  Relation relation = Relation::supports;
  std::string about_candidate;
  std::map<std::string, double> metrics;

  bool operator==(const EvidenceItem&) const = default;
};

struct StanceProposal {
  std::string candidate_id;
  std::string why;
  std::vector<EvidenceItem> evidence;

  bool operator==(const StanceProposal&) const = default;
};

enum class Decision { agree, counter };

struct SibResponse {
  Decision decision = Decision::agree;
  std::optional<std::string> candidate_id;  // required on counter
  std::string why;
  std::vector<EvidenceItem> evidence;

  bool operator==(const SibResponse&) const = default;
};

struct DebateRound {
  int k = 1;
  StanceProposal tsu;
  SibResponse sib;

  bool operator==(const DebateRound&) const = default;
};

// Dialogue history handed to policies: all rounds before the current one.
using DebateHistory = std::span<const DebateRound>;

struct DebateTrace {
  std::vector<DebateRound> rounds;
  bool consensus = false;
  std::string final_tsu_id;
  std::string final_sib_id;

  bool operator==(const DebateTrace&) const = default;
};

// View of the environment handed to policies alongside the context packet.
// Per-candidate maps are keyed by card id; `clearance` is the residual free
// distance beyond the action endpoint along its ray, `new_area` the count of
// not-yet-observed cells the action would bring into view.
struct EnvView {
  double goal_bearing = 0.0;   // estimated, radians, agent frame
  double goal_distance = 0.0;  // meters
  double success_radius = 0.5;
  double r_max = 1.5;
  std::map<std::string, double> clearance;
  std::map<std::string, double> new_area;
  std::vector<std::string> local_sketch;  // ASCII occupancy rows for prompting
};

enum class Role { TSU, SIB, NCA };

struct Arbitration {
  std::string id;
  std::string why;
  std::vector<EvidenceItem> evidence;
  bool fallback = false;  // set when arbitration had to default to TSU
};

class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stance implementation. A policy serves one role; calling an entry point
// outside that role throws std::logic_error. Implementations must return
// only ids present in the current card set and must always return.
class StancePolicy {
 public:
  virtual ~StancePolicy() = default;

  virtual Role role() const = 0;

  // Called by the runner before each step (resets per-step state, advances
  // scripted cursors, clears fallback latches).
  virtual void begin_step(int /*step*/) {}

  virtual StanceProposal propose(const ContextPacket&, const EnvView&, DebateHistory) {
    throw std::logic_error("policy does not implement the TSU entry point");
  }
  virtual SibResponse respond(const ContextPacket&, const EnvView&, const std::string& /*tsu_id*/,
                              DebateHistory) {
    throw std::logic_error("policy does not implement the SIB entry point");
  }
  virtual Arbitration arbitrate(const std::string& /*goal*/, const std::vector<CandidateCard>&,
                                const DebateTrace&) {
    throw std::logic_error("policy does not implement the NCA entry point");
  }

  // True when the last call fell back internally (remote backend failure).
  virtual bool consumed_fallback() const { return false; }
};

// Runs up to K rounds of TSU proposal / SIB response, exiting early on the
// first agreement. Validates the message contract and referential integrity
// of evidence; violations raise ProtocolViolation naming round and stance.
DebateTrace run_debate(const ContextPacket& ctx, const EnvView& view, StancePolicy& tsu,
                       StancePolicy& sib, int rounds);

// 1 iff the final executed round ended in agreement.
int consensus_indicator(const DebateTrace& trace);

// The discarded stance preference opposing `chosen_id`: SIB's final counter
// when the choice is TSU's, TSU's final pick when the choice is SIB's. When
// the choice matches neither, the final preference angularly closest to the
// chosen card wins, ties toward TSU. Only valid without consensus.
std::string final_alternative(const DebateTrace& trace, const std::string& chosen_id,
                              const std::vector<CandidateCard>& cards);

// JSON bindings (canonical: alphabetically ordered keys, optional fields
// omitted when empty).
void to_json(nlohmann::json& j, const EvidenceItem& e);
void from_json(const nlohmann::json& j, EvidenceItem& e);
void to_json(nlohmann::json& j, const StanceProposal& p);
void from_json(const nlohmann::json& j, StanceProposal& p);
void to_json(nlohmann::json& j, const SibResponse& r);
void from_json(const nlohmann::json& j, SibResponse& r);
void to_json(nlohmann::json& j, const DebateRound& r);
void from_json(const nlohmann::json& j, DebateRound& r);
void to_json(nlohmann::json& j, const DebateTrace& t);
void from_json(const nlohmann::json& j, DebateTrace& t);

// Fixture form: one round object per line, exactly the rounds run.
std::string to_fixture_jsonl(const DebateTrace& trace);

// Parses fixture lines into per-step groups (a new group starts whenever k
// resets to 1). Throws on malformed lines.
std::vector<std::vector<DebateRound>> parse_fixture_jsonl(const std::string& text);

}  // namespace dscd
