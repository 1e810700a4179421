#include "dscd/remote.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace dscd {

using nlohmann::json;

void RemoteBackendConfig::validate() const {
  if (endpoint.empty()) throw std::invalid_argument("remote: endpoint required");
  if (model.empty()) throw std::invalid_argument("remote: model required");
  if (timeout_s <= 0.0) throw std::invalid_argument("remote: timeout must be positive");
  if (max_retries < 0) throw std::invalid_argument("remote: retries must be >= 0");
  if (backoff_s < 0.0) throw std::invalid_argument("remote: backoff must be >= 0");
}

void RateLimiter::acquire() {
  using clock = std::chrono::steady_clock;
  if (min_interval_s_ <= 0.0) return;
  double wait = 0.0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const double now = std::chrono::duration<double>(clock::now().time_since_epoch()).count();
    if (now < next_allowed_) wait = next_allowed_ - now;
    next_allowed_ = std::max(now, next_allowed_) + min_interval_s_;
  }
  if (wait > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(wait));
}

// ---------------------------------------------------------------------------
// Prompt rendering

std::string render_card_table(const std::vector<CandidateCard>& cards) {
  std::ostringstream out;
  out << "id    r(m)   theta(deg)  description\n";
  for (const auto& c : cards) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-5s %5.2f  %9.1f   %s\n", c.id.c_str(), c.action.r,
                  rad_to_deg(c.action.theta), c.direction_text.c_str());
    out << line;
  }
  return out.str();
}

std::string render_context_prompt(const ContextPacket& ctx, const EnvView& view) {
  std::ostringstream out;
  out << "Goal: " << ctx.goal_text << "\n";
  if (!ctx.evidence_cues.empty()) {
    out << "Cues:\n";
    for (const auto& cue : ctx.evidence_cues) out << "  - " << cue << "\n";
  }
  out << "Candidates:\n" << render_card_table(ctx.cards);
  if (!view.local_sketch.empty()) {
    out << "Local occupancy (# wall, . free, @ agent):\n";
    for (const auto& row : view.local_sketch) out << "  " << row << "\n";
  }
  return out.str();
}

std::string render_history(DebateHistory history) {
  if (history.empty()) return "No prior rounds.\n";
  std::ostringstream out;
  for (const auto& round : history) {
    out << "Round " << round.k << ": TSU proposed " << round.tsu.candidate_id << " ("
        << round.tsu.why << "); SIB ";
    if (round.sib.decision == Decision::agree) {
      out << "agreed";
    } else {
      out << "countered with " << *round.sib.candidate_id;
    }
    out << " (" << round.sib.why << ").\n";
  }
  return out.str();
}

std::string render_debate(const DebateTrace& trace) {
  std::string out = render_history(DebateHistory{trace.rounds});
  out += trace.consensus ? "The debate ended in agreement.\n"
                         : "The debate ended without agreement.\n";
  return out;
}

namespace {

const char* role_system_prompt(Role role) {
  switch (role) {
    case Role::TSU:
      return "You are the task-scene stance of a navigation agent. Prefer the candidate that "
             "best advances toward the goal given the layout. Answer with a single JSON object: "
             "{\"id\": str, \"why\": str, \"evidence\": [{\"about\": str, \"relation\": "
             "\"supports\"|\"attacks\", \"text\": str}]}.";
    case Role::SIB:
      return "You are the safety-information stance of a navigation agent. Audit the proposal "
             "for collision risk and observability. Answer with a single JSON object: "
             "{\"dec\": \"agree\"|\"counter\", \"id\": str (when countering), \"why\": str, "
             "\"evidence\": [{\"about\": str, \"relation\": \"supports\"|\"attacks\", "
             "\"text\": str}]}.";
    case Role::NCA:
      return "You arbitrate a navigation debate, weighing progress, safety, and information. "
             "Answer with a single JSON object: {\"id\": str, \"why\": str, \"evidence\": "
             "[{\"about\": str, \"relation\": \"supports\"|\"attacks\", \"text\": str}]}.";
  }
  return "";
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

// Splits "http(s)://host[:port]/path" into client base and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("remote: malformed endpoint");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

RemotePolicy::RemotePolicy(Role role, RemoteBackendConfig cfg, HeuristicWeights fallback_weights,
                           std::shared_ptr<RateLimiter> limiter)
    : role_(role),
      cfg_(std::move(cfg)),
      fallback_(role, fallback_weights),
      limiter_(std::move(limiter)) {
  cfg_.validate();
}

void RemotePolicy::begin_step(int) { used_fallback_ = false; }

std::string RemotePolicy::complete(
    const std::vector<std::pair<std::string, std::string>>& messages) {
  json body;
  body["model"] = cfg_.model;
  body["temperature"] = cfg_.temperature;
  body["messages"] = json::array();
  for (const auto& [role, content] : messages) {
    body["messages"].push_back({{"content", content}, {"role", role}});
  }

  const auto [base, path] = split_endpoint(cfg_.endpoint);
  std::string api_key;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key = key;

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = cfg_.backoff_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    if (limiter_) limiter_->acquire();

    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const std::exception& e) {
        throw BackendError(std::string("remote: malformed completion envelope: ") + e.what());
      }
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) break;
  }
  throw BackendError("remote: request failed after retries (" + last_error + ")");
}

json RemotePolicy::ask_json(const std::string& system_prompt, const std::string& user_prompt,
                            const std::string& schema_hint, bool& ok) {
  ok = false;
  std::vector<std::pair<std::string, std::string>> messages{{"system", system_prompt},
                                                            {"user", user_prompt}};
  for (int round = 0; round < 2; ++round) {
    std::string content;
    try {
      content = complete(messages);
    } catch (const BackendError&) {
      if (!cfg_.fallback_to_heuristic) throw;
      return json();  // transport dead: callers fall back
    }
    try {
      json parsed = json::parse(content);
      if (!parsed.is_object()) throw std::invalid_argument("response is not an object");
      ok = true;
      return parsed;
    } catch (const std::exception& e) {
      messages.emplace_back("assistant", content);
      messages.emplace_back("user", std::string("Your reply was invalid (") + e.what() +
                                        "). Answer again with one JSON object only. " +
                                        schema_hint);
    }
  }
  return json();
}

namespace {

// Validation shared by first parse and reprompt.
StanceProposal parse_proposal(const json& j, const ContextPacket& ctx) {
  StanceProposal p;
  p.candidate_id = j.at("id").get<std::string>();
  if (!find_card(ctx.cards, p.candidate_id)) {
    throw std::invalid_argument("unknown candidate id '" + p.candidate_id + "'");
  }
  p.why = j.value("why", "");
  if (j.contains("evidence")) p.evidence = j.at("evidence").get<std::vector<EvidenceItem>>();
  for (const auto& ev : p.evidence) {
    if (!find_card(ctx.cards, ev.about_candidate)) {
      throw std::invalid_argument("evidence about unknown id '" + ev.about_candidate + "'");
    }
  }
  return p;
}

SibResponse parse_response(const json& j, const ContextPacket& ctx, const std::string& tsu_id) {
  SibResponse r;
  const std::string dec = j.at("dec").get<std::string>();
  if (dec == "agree") {
    r.decision = Decision::agree;
  } else if (dec == "counter") {
    r.decision = Decision::counter;
  } else {
    throw std::invalid_argument("dec must be 'agree' or 'counter'");
  }
  if (j.contains("id") && !j.at("id").is_null()) r.candidate_id = j.at("id").get<std::string>();
  if (r.decision == Decision::counter) {
    if (!r.candidate_id) throw std::invalid_argument("counter requires an id");
    if (!find_card(ctx.cards, *r.candidate_id)) {
      throw std::invalid_argument("unknown candidate id '" + *r.candidate_id + "'");
    }
  } else if (r.candidate_id && *r.candidate_id != tsu_id) {
    throw std::invalid_argument("agree must not rename the proposal");
  }
  r.why = j.value("why", "");
  if (j.contains("evidence")) r.evidence = j.at("evidence").get<std::vector<EvidenceItem>>();
  for (const auto& ev : r.evidence) {
    if (!find_card(ctx.cards, ev.about_candidate)) {
      throw std::invalid_argument("evidence about unknown id '" + ev.about_candidate + "'");
    }
  }
  return r;
}

}  // namespace

StanceProposal RemotePolicy::propose(const ContextPacket& ctx, const EnvView& view,
                                     DebateHistory history) {
  if (role_ != Role::TSU) throw std::logic_error("remote policy role mismatch");
  const std::string user = render_context_prompt(ctx, view) + "\nHistory:\n" +
                           render_history(history) + "\nPick the candidate advancing the goal.";
  const std::string hint = "Schema: {\"id\", \"why\", \"evidence\"}.";
  for (int attempt = 0; attempt < 2; ++attempt) {
    bool ok = false;
    const json j = ask_json(role_system_prompt(role_), user, hint, ok);
    if (!ok) break;
    try {
      return parse_proposal(j, ctx);
    } catch (const std::exception&) {
      continue;  // one reprompt via the loop, then fall back
    }
  }
  if (!cfg_.fallback_to_heuristic) throw BackendError("remote TSU: no valid reply");
  used_fallback_ = true;
  return fallback_.propose(ctx, view, history);
}

SibResponse RemotePolicy::respond(const ContextPacket& ctx, const EnvView& view,
                                  const std::string& tsu_id, DebateHistory history) {
  if (role_ != Role::SIB) throw std::logic_error("remote policy role mismatch");
  const std::string user = render_context_prompt(ctx, view) + "\nHistory:\n" +
                           render_history(history) + "\nTSU proposes " + tsu_id +
                           ". Agree or counter.";
  const std::string hint = "Schema: {\"dec\", \"id\", \"why\", \"evidence\"}.";
  for (int attempt = 0; attempt < 2; ++attempt) {
    bool ok = false;
    const json j = ask_json(role_system_prompt(role_), user, hint, ok);
    if (!ok) break;
    try {
      return parse_response(j, ctx, tsu_id);
    } catch (const std::exception&) {
      continue;
    }
  }
  if (!cfg_.fallback_to_heuristic) throw BackendError("remote SIB: no valid reply");
  used_fallback_ = true;
  return fallback_.respond(ctx, view, tsu_id, history);
}

Arbitration RemotePolicy::arbitrate(const std::string& goal,
                                    const std::vector<CandidateCard>& cards,
                                    const DebateTrace& trace) {
  if (role_ != Role::NCA) throw std::logic_error("remote policy role mismatch");
  const std::string user = "Goal: " + goal + "\nCandidates:\n" + render_card_table(cards) +
                           "\nDebate:\n" + render_debate(trace) + "\nPick the final id.";
  const std::string hint = "Schema: {\"id\", \"why\", \"evidence\"}.";
  ContextPacket pseudo;
  pseudo.goal_text = goal;
  pseudo.cards = cards;
  for (int attempt = 0; attempt < 2; ++attempt) {
    bool ok = false;
    const json j = ask_json(role_system_prompt(role_), user, hint, ok);
    if (!ok) break;
    try {
      const StanceProposal p = parse_proposal(j, pseudo);
      Arbitration arb;
      arb.id = p.candidate_id;
      arb.why = p.why;
      arb.evidence = p.evidence;
      return arb;
    } catch (const std::exception&) {
      continue;
    }
  }
  if (!cfg_.fallback_to_heuristic) throw BackendError("remote NCA: no valid reply");
  used_fallback_ = true;
  return fallback_.arbitrate(goal, cards, trace);
}

}  // namespace dscd
