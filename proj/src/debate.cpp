#include "dscd/debate.hpp"

#include <cmath>
#include <sstream>

namespace dscd {

namespace {

using nlohmann::json;

void ensure_known_id(const ContextPacket& ctx, const std::string& id, int round,
                     const char* stance) {
  if (find_card(ctx.cards, id)) return;
  std::ostringstream msg;
  msg << "protocol violation: round " << round << ", " << stance << " referenced unknown id '"
      << id << "'";
  throw ProtocolViolation(msg.str());
}

void ensure_evidence_ids(const ContextPacket& ctx, const std::vector<EvidenceItem>& ev, int round,
                         const char* stance) {
  for (const auto& item : ev) ensure_known_id(ctx, item.about_candidate, round, stance);
}

}  // namespace

DebateTrace run_debate(const ContextPacket& ctx, const EnvView& view, StancePolicy& tsu,
                       StancePolicy& sib, int rounds) {
  if (rounds < 1) throw std::invalid_argument("run_debate: rounds must be >= 1");
  if (ctx.cards.empty()) throw std::invalid_argument("run_debate: empty candidate set");

  DebateTrace trace;
  for (int k = 1; k <= rounds; ++k) {
    DebateHistory history{trace.rounds};
    StanceProposal prop = tsu.propose(ctx, view, history);
    ensure_known_id(ctx, prop.candidate_id, k, "TSU");
    ensure_evidence_ids(ctx, prop.evidence, k, "TSU");

    SibResponse resp = sib.respond(ctx, view, prop.candidate_id, history);
    if (resp.decision == Decision::counter) {
      if (!resp.candidate_id) {
        std::ostringstream msg;
        msg << "protocol violation: round " << k << ", SIB countered without a candidate";
        throw ProtocolViolation(msg.str());
      }
      ensure_known_id(ctx, *resp.candidate_id, k, "SIB");
    } else if (resp.candidate_id && *resp.candidate_id != prop.candidate_id) {
      std::ostringstream msg;
      msg << "protocol violation: round " << k << ", SIB agreed but named a different id '"
          << *resp.candidate_id << "'";
      throw ProtocolViolation(msg.str());
    }
    ensure_evidence_ids(ctx, resp.evidence, k, "SIB");

    trace.rounds.push_back(DebateRound{k, std::move(prop), std::move(resp)});
    if (trace.rounds.back().sib.decision == Decision::agree) break;
  }

  const DebateRound& last = trace.rounds.back();
  trace.consensus = last.sib.decision == Decision::agree;
  trace.final_tsu_id = last.tsu.candidate_id;
  trace.final_sib_id = trace.consensus ? last.tsu.candidate_id : *last.sib.candidate_id;
  return trace;
}

int consensus_indicator(const DebateTrace& trace) {
  if (trace.rounds.empty()) throw std::logic_error("consensus_indicator: empty trace");
  return trace.rounds.back().sib.decision == Decision::agree ? 1 : 0;
}

std::string final_alternative(const DebateTrace& trace, const std::string& chosen_id,
                              const std::vector<CandidateCard>& cards) {
  if (trace.rounds.empty()) throw std::logic_error("final_alternative: empty trace");
  if (consensus_indicator(trace) == 1) {
    throw std::logic_error("final_alternative: no alternative under consensus");
  }
  if (chosen_id == trace.final_tsu_id) return trace.final_sib_id;
  if (chosen_id == trace.final_sib_id) return trace.final_tsu_id;
  // Arbitration picked a third candidate: take the final stance preference
  // angularly closest to it, ties toward TSU.
  const CandidateCard* chosen = find_card(cards, chosen_id);
  const CandidateCard* tsu_card = find_card(cards, trace.final_tsu_id);
  const CandidateCard* sib_card = find_card(cards, trace.final_sib_id);
  if (!chosen || !tsu_card || !sib_card) {
    throw std::logic_error("final_alternative: id not in candidate set");
  }
  const double d_tsu = std::abs(wrap_angle(tsu_card->action.theta - chosen->action.theta));
  const double d_sib = std::abs(wrap_angle(sib_card->action.theta - chosen->action.theta));
  return d_sib < d_tsu ? trace.final_sib_id : trace.final_tsu_id;
}

// ---------------------------------------------------------------------------
// JSON bindings

void to_json(json& j, const EvidenceItem& e) {
  j = json{{"about", e.about_candidate},
           {"relation", e.relation == Relation::supports ? "supports" : "attacks"},
           {"text", e.text}};
  if (!e.metrics.empty()) j["metrics"] = e.metrics;
}

void from_json(const json& j, EvidenceItem& e) {
  e.about_candidate = j.at("about").get<std::string>();
  const std::string rel = j.at("relation").get<std::string>();
  if (rel == "supports") {
    e.relation = Relation::supports;
  } else if (rel == "attacks") {
    e.relation = Relation::attacks;
  } else {
    throw std::invalid_argument("evidence relation must be 'supports' or 'attacks'");
  }
  e.text = j.at("text").get<std::string>();
  e.metrics.clear();
  if (j.contains("metrics")) e.metrics = j.at("metrics").get<std::map<std::string, double>>();
}

void to_json(json& j, const StanceProposal& p) {
  j = json{{"evidence", p.evidence}, {"id", p.candidate_id}, {"why", p.why}};
}

void from_json(const json& j, StanceProposal& p) {
  p.candidate_id = j.at("id").get<std::string>();
  p.why = j.at("why").get<std::string>();
  p.evidence = j.at("evidence").get<std::vector<EvidenceItem>>();
}

void to_json(json& j, const SibResponse& r) {
  j = json{{"dec", r.decision == Decision::agree ? "agree" : "counter"},
           {"evidence", r.evidence},
           {"why", r.why}};
  if (r.candidate_id) j["id"] = *r.candidate_id;
}

void from_json(const json& j, SibResponse& r) {
  const std::string dec = j.at("dec").get<std::string>();
  if (dec == "agree") {
    r.decision = Decision::agree;
  } else if (dec == "counter") {
    r.decision = Decision::counter;
  } else {
    throw std::invalid_argument("sib decision must be 'agree' or 'counter'");
  }
  r.candidate_id.reset();
  if (j.contains("id")) r.candidate_id = j.at("id").get<std::string>();
  r.why = j.at("why").get<std::string>();
  r.evidence = j.at("evidence").get<std::vector<EvidenceItem>>();
}

void to_json(json& j, const DebateRound& r) {
  j = json{{"k", r.k}, {"sib", r.sib}, {"tsu", r.tsu}};
}

void from_json(const json& j, DebateRound& r) {
  r.k = j.at("k").get<int>();
  r.tsu = j.at("tsu").get<StanceProposal>();
  r.sib = j.at("sib").get<SibResponse>();
}

void to_json(json& j, const DebateTrace& t) {
  j = json{{"consensus", t.consensus},
           {"final_sib_id", t.final_sib_id},
           {"final_tsu_id", t.final_tsu_id},
           {"rounds", t.rounds}};
}

void from_json(const json& j, DebateTrace& t) {
  t.rounds = j.at("rounds").get<std::vector<DebateRound>>();
  t.consensus = j.at("consensus").get<bool>();
  t.final_tsu_id = j.at("final_tsu_id").get<std::string>();
  t.final_sib_id = j.at("final_sib_id").get<std::string>();
}

std::string to_fixture_jsonl(const DebateTrace& trace) {
  std::string out;
  for (const auto& round : trace.rounds) {
    out += json(round).dump();
    out += '\n';
  }
  return out;
}

std::vector<std::vector<DebateRound>> parse_fixture_jsonl(const std::string& text) {
  std::vector<std::vector<DebateRound>> groups;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    DebateRound round;
    try {
      round = json::parse(line).get<DebateRound>();
    } catch (const std::exception& e) {
      throw std::runtime_error("debate fixture line " + std::to_string(lineno) + ": " + e.what());
    }
    if (round.k == 1 || groups.empty()) groups.emplace_back();
    groups.back().push_back(std::move(round));
  }
  return groups;
}

}  // namespace dscd
