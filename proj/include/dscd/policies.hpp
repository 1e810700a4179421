#pragma once

#include <string>
#include <vector>

#include "dscd/debate.hpp"

namespace dscd {

// Scoring weights for the heuristic stances and arbitration. All scores are
// scale-invariant: multiplying every weight by the same positive factor
// leaves every chosen id unchanged.
struct HeuristicWeights {
  // TSU: belief = w_g * cos(theta - goal_bearing) + w_p * (r / r_max)
  double w_g = 1.0;
  double w_p = 0.2;
  double delta_att = 0.5;   // per-round penalty on attacked candidates
  double delta_sup = 0.25;  // per-round bonus on supported candidates
  // SIB: s = w_s * min(1, clearance / r) + w_i * (new_area / max new_area)
  double w_s = 0.6;
  double w_i = 0.4;
  double gamma = 0.8;  // agree iff s(tsu pick) >= gamma * max s
  // NCA: u = lambda_t * progress + lambda_s * safety + lambda_i * info
  double lambda_t = 0.5;
  double lambda_s = 0.3;
  double lambda_i = 0.2;

  bool operator==(const HeuristicWeights&) const = default;
};

// Deterministic stance realizations. TSU scores goal alignment and stride,
// SIB scores clearance margin and newly visible area, NCA weighs the terms
// logged in evidence metadata. `goal_blind` swaps TSU's scoring for SIB's
// (the safety stance proposing), used by the sib-only ablation.
class HeuristicPolicy final : public StancePolicy {
 public:
  HeuristicPolicy(Role role, HeuristicWeights weights, bool goal_blind = false)
      : role_(role), w_(weights), goal_blind_(goal_blind) {}

  Role role() const override { return role_; }

  StanceProposal propose(const ContextPacket&, const EnvView&, DebateHistory) override;
  SibResponse respond(const ContextPacket&, const EnvView&, const std::string& tsu_id,
                      DebateHistory) override;
  Arbitration arbitrate(const std::string& goal, const std::vector<CandidateCard>&,
                        const DebateTrace&) override;

 private:
  Role role_;
  HeuristicWeights w_;
  bool goal_blind_;
};

// Replays proposals/responses/arbitrations from fixture files, ignoring the
// live context. The debate engine still validates every replayed id.
class ScriptedPolicy final : public StancePolicy {
 public:
  // TSU/SIB: `path` is a debate fixture (JSONL rounds, k restarting at 1 per
  // step). NCA: one {"evidence": [...], "id": ..., "why": ...} object per line.
  ScriptedPolicy(Role role, const std::string& path);

  Role role() const override { return role_; }
  void begin_step(int step) override;

  StanceProposal propose(const ContextPacket&, const EnvView&, DebateHistory) override;
  SibResponse respond(const ContextPacket&, const EnvView&, const std::string& tsu_id,
                      DebateHistory) override;
  Arbitration arbitrate(const std::string& goal, const std::vector<CandidateCard>&,
                        const DebateTrace&) override;

 private:
  Role role_;
  std::vector<std::vector<DebateRound>> groups_;   // TSU/SIB scripts
  std::vector<Arbitration> arbitrations_;          // NCA scripts
  int step_index_ = 0;

  const DebateRound& round_at(std::size_t round_index, const char* who) const;
};

}  // namespace dscd
