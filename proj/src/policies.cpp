#include "dscd/policies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dscd {

namespace {

double get_or(const std::map<std::string, double>& m, const std::string& key, double fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

// Deterministic argmax over card order; first card wins ties.
std::string argmax_id(const std::vector<CandidateCard>& cards,
                      const std::map<std::string, double>& score) {
  const CandidateCard* best = nullptr;
  double best_score = 0.0;
  for (const auto& c : cards) {
    auto it = score.find(c.id);
    if (it == score.end()) continue;
    if (!best || it->second > best_score) {
      best = &c;
      best_score = it->second;
    }
  }
  if (!best) throw std::logic_error("argmax over empty score set");
  return best->id;
}

}  // namespace

// ---------------------------------------------------------------------------
// Heuristic TSU

namespace {

// SIB's safety-information score; also used by the goal-blind proposer.
std::map<std::string, double> safety_scores(const ContextPacket& ctx, const EnvView& view,
                                            const HeuristicWeights& w) {
  double max_na = 0.0;
  for (const auto& c : ctx.cards) {
    if (c.kind != CardKind::move) continue;
    max_na = std::max(max_na, get_or(view.new_area, c.id, 0.0));
  }
  std::map<std::string, double> s;
  for (const auto& c : ctx.cards) {
    if (c.kind != CardKind::move) continue;
    const double clearance = get_or(view.clearance, c.id, 0.0);
    const double ratio = c.action.r <= 1e-9 ? 1.0 : std::min(1.0, clearance / c.action.r);
    const double info = max_na > 0.0 ? get_or(view.new_area, c.id, 0.0) / max_na : 0.0;
    s[c.id] = w.w_s * ratio + w.w_i * info;
  }
  return s;
}

}  // namespace

StanceProposal HeuristicPolicy::propose(const ContextPacket& ctx, const EnvView& view,
                                        DebateHistory history) {
  std::map<std::string, double> belief;
  const CandidateCard* stop_card = nullptr;
  if (goal_blind_) {
    belief = safety_scores(ctx, view, w_);
    for (const auto& c : ctx.cards) {
      if (c.kind == CardKind::stop) stop_card = &c;
    }
  } else {
    for (const auto& c : ctx.cards) {
      if (c.kind == CardKind::stop) {
        stop_card = &c;
        continue;
      }
      belief[c.id] = w_.w_g * std::cos(wrap_angle(c.action.theta - view.goal_bearing)) +
                     w_.w_p * (view.r_max > 0.0 ? c.action.r / view.r_max : 0.0);
    }
  }
  if (stop_card) {
    // Stop dominates once within stopping range and is never picked before.
    const double bound = 2.0 * (w_.w_g + w_.w_p + w_.w_s + w_.w_i);
    belief[stop_card->id] = view.goal_distance <= view.success_radius ? bound : -bound;
  }

  // Reconstruct the belief shifts induced by SIB's prior-round evidence.
  for (const auto& round : history) {
    for (const auto& ev : round.sib.evidence) {
      auto it = belief.find(ev.about_candidate);
      if (it == belief.end()) continue;
      it->second += ev.relation == Relation::attacks ? -w_.delta_att : w_.delta_sup;
    }
  }

  StanceProposal prop;
  prop.candidate_id = argmax_id(ctx.cards, belief);

  const CandidateCard* pick = find_card(ctx.cards, prop.candidate_id);
  const std::string* prev_counter = nullptr;
  if (!history.empty() && history.back().sib.decision == Decision::counter) {
    prev_counter = &*history.back().sib.candidate_id;
  }

  auto progress_of = [&](const CandidateCard& c) {
    return std::cos(wrap_angle(c.action.theta - view.goal_bearing));
  };
  if (pick->kind == CardKind::stop) {
    prop.why = "target within stopping distance";
    prop.evidence.push_back(
        EvidenceItem{"goal is in stopping range", Relation::supports, pick->id, {}});
  } else {
    if (prev_counter && *prev_counter == prop.candidate_id) {
      prop.why = "conceding to safety counter";
    } else if (history.empty()) {
      prop.why = "aligns with estimated goal bearing";
    } else {
      prop.why = "retaining goal-aligned choice";
    }
    prop.evidence.push_back(EvidenceItem{"advances toward the goal bearing",
                                         Relation::supports,
                                         prop.candidate_id,
                                         {{"progress", progress_of(*pick)}}});
    if (prev_counter && *prev_counter != prop.candidate_id) {
      const CandidateCard* alt = find_card(ctx.cards, *prev_counter);
      if (alt && alt->kind == CardKind::move) {
        prop.evidence.push_back(EvidenceItem{"weaker goal progress than proposal",
                                             Relation::attacks,
                                             alt->id,
                                             {{"progress", progress_of(*alt)}}});
      }
    }
  }
  return prop;
}

// ---------------------------------------------------------------------------
// Heuristic SIB

SibResponse HeuristicPolicy::respond(const ContextPacket& ctx, const EnvView& view,
                                     const std::string& tsu_id, DebateHistory) {
  SibResponse resp;
  const CandidateCard* pick = find_card(ctx.cards, tsu_id);
  if (!pick) throw std::logic_error("sib: unknown TSU id");

  if (pick->kind == CardKind::stop) {
    resp.decision = Decision::agree;
    resp.why = "stopping carries no risk";
    resp.evidence.push_back(
        EvidenceItem{"terminal action", Relation::supports, pick->id, {{"safety", 1.0}}});
    return resp;
  }

  const auto s = safety_scores(ctx, view, w_);
  double s_max = 0.0;
  for (const auto& [id, v] : s) s_max = std::max(s_max, v);
  const double s_tsu = get_or(s, tsu_id, 0.0);

  double max_na = 0.0;
  for (const auto& c : ctx.cards) {
    if (c.kind == CardKind::move) max_na = std::max(max_na, get_or(view.new_area, c.id, 0.0));
  }
  auto parts = [&](const CandidateCard& c) {
    const double clearance = get_or(view.clearance, c.id, 0.0);
    const double safety = c.action.r <= 1e-9 ? 1.0 : std::min(1.0, clearance / c.action.r);
    const double info = max_na > 0.0 ? get_or(view.new_area, c.id, 0.0) / max_na : 0.0;
    return std::pair<double, double>{safety, info};
  };

  const auto [tsu_safety, tsu_info] = parts(*pick);
  if (s_tsu >= w_.gamma * s_max - 1e-12) {
    resp.decision = Decision::agree;
    resp.why = "proposal within safety-information tolerance";
    resp.evidence.push_back(EvidenceItem{"acceptable clearance and coverage",
                                         Relation::supports,
                                         tsu_id,
                                         {{"info", tsu_info}, {"safety", tsu_safety}}});
    return resp;
  }

  resp.decision = Decision::counter;
  resp.candidate_id = argmax_id(ctx.cards, s);
  const CandidateCard* alt = find_card(ctx.cards, *resp.candidate_id);
  const auto [alt_safety, alt_info] = parts(*alt);
  // Cite whichever deficiency dominates the score gap.
  if (w_.w_s * (alt_safety - tsu_safety) >= w_.w_i * (alt_info - tsu_info)) {
    resp.why = "low clearance margin on proposal";
  } else {
    resp.why = "little new area from proposal";
  }
  resp.evidence.push_back(EvidenceItem{"risk-information deficit",
                                       Relation::attacks,
                                       tsu_id,
                                       {{"info", tsu_info}, {"safety", tsu_safety}}});
  resp.evidence.push_back(EvidenceItem{"safer and more informative",
                                       Relation::supports,
                                       *resp.candidate_id,
                                       {{"info", alt_info}, {"safety", alt_safety}}});
  return resp;
}

// ---------------------------------------------------------------------------
// Heuristic NCA

Arbitration HeuristicPolicy::arbitrate(const std::string&, const std::vector<CandidateCard>& cards,
                                       const DebateTrace& trace) {
  if (trace.rounds.empty()) throw std::logic_error("nca: empty trace");

  auto items_about = [&](const std::string& id) {
    std::vector<EvidenceItem> out;
    for (const auto& round : trace.rounds) {
      for (const auto& ev : round.tsu.evidence) {
        if (ev.about_candidate == id) out.push_back(ev);
      }
      for (const auto& ev : round.sib.evidence) {
        if (ev.about_candidate == id) out.push_back(ev);
      }
    }
    return out;
  };

  Arbitration arb;
  if (trace.consensus) {
    arb.id = trace.final_tsu_id;
    arb.why = "consensus action";
    arb.evidence = items_about(arb.id);
    return arb;
  }

  // Merge logged metrics per final preference; later rounds override.
  auto metrics_of = [&](const std::string& id) {
    std::map<std::string, double> m;
    for (const auto& ev : items_about(id)) {
      for (const auto& [k, v] : ev.metrics) m[k] = v;
    }
    return m;
  };
  const auto m_tsu = metrics_of(trace.final_tsu_id);
  const auto m_sib = metrics_of(trace.final_sib_id);
  if (m_tsu.empty() || m_sib.empty()) {
    arb.id = trace.final_tsu_id;
    arb.why = "missing evidence metadata; defaulting to TSU preference";
    arb.fallback = true;
    arb.evidence = items_about(arb.id);
    return arb;
  }

  auto utility = [&](const std::map<std::string, double>& m) {
    return w_.lambda_t * get_or(m, "progress", 0.0) + w_.lambda_s * get_or(m, "safety", 0.0) +
           w_.lambda_i * get_or(m, "info", 0.0);
  };
  const double u_tsu = utility(m_tsu);
  const double u_sib = utility(m_sib);
  arb.id = u_sib > u_tsu ? trace.final_sib_id : trace.final_tsu_id;  // ties go to TSU
  arb.why = "higher weighted progress-safety-information utility";
  arb.evidence = items_about(arb.id);
  if (!find_card(cards, arb.id)) throw std::logic_error("nca: final preference not in card set");
  return arb;
}

// ---------------------------------------------------------------------------
// Scripted replay

ScriptedPolicy::ScriptedPolicy(Role role, const std::string& path) : role_(role) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scripted policy: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (role_ == Role::NCA) {
    std::istringstream lines(buf.str());
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      Arbitration a;
      a.id = j.at("id").get<std::string>();
      a.why = j.at("why").get<std::string>();
      if (j.contains("evidence")) a.evidence = j.at("evidence").get<std::vector<EvidenceItem>>();
      arbitrations_.push_back(std::move(a));
    }
  } else {
    groups_ = parse_fixture_jsonl(buf.str());
  }
}

void ScriptedPolicy::begin_step(int step) { step_index_ = std::max(0, step - 1); }

const DebateRound& ScriptedPolicy::round_at(std::size_t round_index, const char* who) const {
  if (static_cast<std::size_t>(step_index_) >= groups_.size() ||
      round_index >= groups_[step_index_].size()) {
    throw std::runtime_error(std::string("scripted ") + who + " exhausted at step " +
                             std::to_string(step_index_ + 1) + ", round " +
                             std::to_string(round_index + 1));
  }
  return groups_[step_index_][round_index];
}

StanceProposal ScriptedPolicy::propose(const ContextPacket&, const EnvView&,
                                       DebateHistory history) {
  if (role_ != Role::TSU) throw std::logic_error("scripted policy role mismatch");
  return round_at(history.size(), "TSU").tsu;
}

SibResponse ScriptedPolicy::respond(const ContextPacket&, const EnvView&, const std::string&,
                                    DebateHistory history) {
  if (role_ != Role::SIB) throw std::logic_error("scripted policy role mismatch");
  return round_at(history.size(), "SIB").sib;
}

Arbitration ScriptedPolicy::arbitrate(const std::string&, const std::vector<CandidateCard>&,
                                      const DebateTrace&) {
  if (role_ != Role::NCA) throw std::logic_error("scripted policy role mismatch");
  if (static_cast<std::size_t>(step_index_) >= arbitrations_.size()) {
    throw std::runtime_error("scripted NCA exhausted at step " + std::to_string(step_index_ + 1));
  }
  return arbitrations_[step_index_];
}

}  // namespace dscd
