#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "dscd/policies.hpp"

namespace dscd {

struct RemoteBackendConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string model;
  std::string api_key_env = "DSCD_API_KEY";
  double timeout_s = 30.0;
  int max_retries = 3;
  double temperature = 0.0;
  double backoff_s = 0.5;            // base for exponential backoff
  double min_request_interval_s = 0.0;  // shared rate limit; 0 disables
  bool fallback_to_heuristic = true;

  void validate() const;  // throws std::invalid_argument

  bool operator==(const RemoteBackendConfig&) const = default;
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Spaces requests at least `min_interval` apart across all users.
class RateLimiter {
 public:
  explicit RateLimiter(double min_interval_s) : min_interval_s_(min_interval_s) {}
  void acquire();

 private:
  std::mutex mu_;
  double min_interval_s_;
  double next_allowed_ = 0.0;  // monotonic seconds
};

// Chat-completion backed stance. The context is rendered to text (goal,
// cues, card table, occupancy sketch) and the model must answer with a
// single JSON object per the role's schema. A schema violation triggers one
// reprompt carrying the error; a second failure falls back to the heuristic
// policy (when enabled) and latches the fallback flag for the step.
// Transport failures retry with exponential backoff; exhausting retries
// raises BackendError unless fallback is enabled.
class RemotePolicy final : public StancePolicy {
 public:
  RemotePolicy(Role role, RemoteBackendConfig cfg, HeuristicWeights fallback_weights,
               std::shared_ptr<RateLimiter> limiter = nullptr);

  Role role() const override { return role_; }
  void begin_step(int step) override;
  bool consumed_fallback() const override { return used_fallback_; }

  StanceProposal propose(const ContextPacket&, const EnvView&, DebateHistory) override;
  SibResponse respond(const ContextPacket&, const EnvView&, const std::string& tsu_id,
                      DebateHistory) override;
  Arbitration arbitrate(const std::string& goal, const std::vector<CandidateCard>&,
                        const DebateTrace&) override;

 private:
  Role role_;
  RemoteBackendConfig cfg_;
  HeuristicPolicy fallback_;
  std::shared_ptr<RateLimiter> limiter_;
  bool used_fallback_ = false;

  std::string complete(const std::vector<std::pair<std::string, std::string>>& messages);
  nlohmann::json ask_json(const std::string& system_prompt, const std::string& user_prompt,
                          const std::string& schema_hint, bool& ok);
};

// Prompt rendering helpers (deterministic, exposed for tests).
std::string render_card_table(const std::vector<CandidateCard>& cards);
std::string render_context_prompt(const ContextPacket& ctx, const EnvView& view);
std::string render_history(DebateHistory history);
std::string render_debate(const DebateTrace& trace);

}  // namespace dscd
